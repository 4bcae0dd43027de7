#pragma once
// Pattern detectors: trivial pairs, bubbles, truncated bubbles, cycle
// witnesses, spot capture analysis, the ball-expansion algorithm and
// component location.

#include <set>
#include <string>
#include <vector>

#include "morsefol/model.hpp"

namespace morsefol {

struct SpotClassification {
  Id spot;
  bool captured = false;
  Id capture_partner;              // set iff captured
  std::optional<bool> essential;   // set iff free
};

/// Working state of the expansion algorithm on one trivially foliated ball.
struct ExpansionState {
  Id ball;                          // representative block, or "around:<sing>"
  std::vector<Id> merged_blocks;    // blocks absorbed into the representative
  std::vector<SpotClassification> spots;
  int free_count = 0;
  int captured_count = 0;
  std::set<Id> conic_ids;
};

struct Component {
  enum class Kind { reeb, truncated_reeb, morse, truncated_morse };
  Kind kind = Kind::reeb;
  bool pseudo = false;    // located through a pseudo-torus / pseudo-disc leaf
  bool singular = false;  // carries trivial bubbles on its leaves
  std::vector<Id> blocks;
  std::vector<Id> gluings;  // capture annuli for truncated Reeb patterns
  Id leaf;                  // locating leaf, when pattern-based
};

std::string to_string(Component::Kind k);

/// Every (center, conic) trivial pair: trivial bubbles plus bubbles whose
/// interior has been reduced to a single center.
std::vector<std::pair<Id, Id>> find_trivial_pairs(const Assembly& a);

/// All non-trivial bubbles, innermost first, then ascending id.
std::vector<Id> find_bubbles(const Assembly& a);

/// All truncated bubbles (definition re-verified on each hit).
std::vector<Id> find_truncated_bubbles(const Assembly& a);

/// One vanishing witness per (generalized) Reeb pattern.
std::vector<CycleWitness> find_vanishing_cycles(const Assembly& a);

/// One anti-vanishing witness per perfect-disc site and pseudo-disc leaf.
/// Requires every leaf to carry at most one conic point.
Result<std::vector<CycleWitness>> find_anti_vanishing_cycles(const Assembly& a);

/// Capture/essential status for every spot of a ball-with-spots.
Result<std::vector<SpotClassification>> classify_spots(const Assembly& a, const Id& ball);

ExpansionState expansion_state_of(const Assembly& a, const Id& ball);

struct Expanded {
  Assembly assembly;
  ExpansionState state;
};

/// Add the solid pair of pants attached along an essential free spot.
Result<Expanded> expand_ball(const Assembly& a, const ExpansionState& state, const Id& along);

/// One expansion or ball-merge action, for trace recording and replay.
struct ExpandAction {
  bool pants = true;  // false: plain addition of two balls through spots
  Id ball;
  Id along;
};

struct ExpansionRun {
  Assembly assembly;
  std::vector<ExpansionState> family;
  std::vector<ExpandAction> actions;
};

/// Expand and merge until the family is completely expanded, pairwise
/// disjoint and non-addable; covers every conic point.
Result<ExpansionRun> completely_expand(const Assembly& a);

/// Merge the ball owning `along` with the ball on the other side of the
/// spot gluing at `along` (replay helper for expansion actions).
Result<Assembly> apply_ball_merge(const Assembly& a, const Id& ball, const Id& along);

/// Locate every Reeb/Morse component, truncated or full, with flags.
std::vector<Component> find_components(const Assembly& a);

}  // namespace morsefol

#pragma once
// Foliation-modifying rewrites: Morse modifications, connected sums,
// eliminations of trivial pairs / bubbles / truncated bubbles, corrective
// movements and the normalization driver. Every rewrite is a pure function
// returning a fresh assembly plus a replayable trace step.

#include <map>
#include <string>
#include <vector>

#include "morsefol/model.hpp"

namespace morsefol {

/// One recorded rewrite, sufficient for certificate replay.
struct RewriteStep {
  std::string op;
  std::vector<Id> consumed;
  std::vector<Id> produced;
  std::map<int, int> singularity_delta;  // Morse index -> count change
  std::map<std::string, std::string> params;
  std::vector<RewriteStep> sub_steps;
};

template <class T = Assembly>
struct Rewritten {
  T assembly;
  RewriteStep step;
};

using RewriteResult = Result<Rewritten<>>;

/// Morse modification (A): relocate the singular level towards the
/// disc-pair side of a double-cone chart.
RewriteResult morse_mod_a(const Assembly& a, const Id& chart, double level);

/// Morse modification (B): relocate the singular level towards the
/// cylinder side. Inverse of (A).
RewriteResult morse_mod_b(const Assembly& a, const Id& chart, double level);

/// Replace a leaf carrying two or more conic points with one leaf per
/// conic point (realized by small Morse modifications).
RewriteResult split_singular_leaf(const Assembly& a, const Id& leaf);

/// Connected sum along two trivially foliated disc sites of opposite
/// direction; adds one conic point, merges boundary components.
RewriteResult connected_sum(const Assembly& a1, const Assembly& a2, const Id& spot1,
                            const Id& spot2, int new_conic_index);

/// Remove a trivial pair (center, conic) together with its trivial bubble.
RewriteResult eliminate_trivial_pair(const Assembly& a, const Id& center, const Id& conic);

/// Remove a bubble: fill the interior with concentric spheres around a new
/// center, then eliminate the resulting trivial pair.
RewriteResult eliminate_bubble(const Assembly& a, const Id& bubble);

/// Fit the designated inward/outward perfect discs of a truncated bubble
/// into a special bubble carrying both conic points on one sphere leaf.
RewriteResult corrective_movement(const Assembly& a, const Id& truncated_bubble);

/// Remove a truncated bubble end to end: corrective movement, leaf split
/// into the mutually nested sphere pair, then bubble elimination.
RewriteResult eliminate_truncated_bubble(const Assembly& a, const Id& truncated_bubble);

/// Turn a truncated Reeb/Morse component whose spot is capped by a
/// trivially foliated ball back into the full component.
RewriteResult complete_truncated_component(const Assembly& a, const Id& component);

enum class OrderPolicy { innermost_then_id, explicit_order };

struct NormalizeOptions {
  OrderPolicy policy = OrderPolicy::innermost_then_id;
  std::vector<Id> explicit_sequence;  // elimination sites, consumed in order
};

struct Normalized {
  Assembly assembly;
  std::vector<RewriteStep> steps;
};

/// Run split / trivial-pair / bubble / truncated-bubble phases to a
/// fixpoint. Terminates: each elimination strictly decreases the total
/// singularity count.
Result<Normalized> normalize(const Assembly& a, const NormalizeOptions& options = {});

/// Re-apply a recorded step to an assembly (certificate replay).
RewriteResult apply_step(const Assembly& a, const RewriteStep& step);

}  // namespace morsefol

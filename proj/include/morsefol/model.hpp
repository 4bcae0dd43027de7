#pragma once
// Decorated block-graph model for codimension-one Morse foliations of S^3.
//
// An Assembly is a table-backed multigraph: foliated blocks joined by
// gluings, with singularities and leaf descriptors tracked in id-indexed
// tables. All values are immutable by convention; operations deep-copy.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace morsefol {

using Id = std::string;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrCode {
  invalid_site,
  invalid_level,
  nothing_to_split,
  orientation_mismatch,
  not_a_trivial_pair,
  cannot_complete,
  cannot_expand,
  not_closed,
  not_normalized,
  unsupported_ambient,
  multi_singular_leaf,
  theorem_violation,
  invalid_spec,
  invalid_assembly,
  parse_error,
};

std::string to_string(ErrCode code);

struct Error {
  ErrCode code;
  std::string message;
};

/// Value-or-error carrier used by every rewrite and query that can fail.
template <class T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Error err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { return std::get<T>(v_); }
  T& value() { return std::get<T>(v_); }
  T take() { return std::move(std::get<T>(v_)); }

  const Error& error() const { return std::get<Error>(v_); }
  ErrCode code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class BlockKind {
  center_ball,
  reeb_solid_torus,
  morse_solid_torus,
  product_band,
  ball_with_spots,
  bubble,
  trivial_bubble,
  truncated_bubble,
  double_cone_chart,
  truncated_reeb,
  truncated_morse,
};

enum class GluingKind {
  tangent,
  spot_transverse,
  connected_sum,
};

enum class LeafShape {
  sphere,
  torus,
  genus,  // genus g >= 2 surface, parameter in LeafDescriptor::genus
  pseudo_torus,
  double_cone,
  pseudo_disc,
  plane,
  disc,
  annulus,
  point,  // a center, as a leaf of the foliation
  generic,
};

enum class SpotDirection { inward, outward };

std::string to_string(BlockKind k);
std::string to_string(GluingKind k);
std::string to_string(LeafShape s);
std::string to_string(SpotDirection d);
std::optional<BlockKind> block_kind_from_string(const std::string& s);
std::optional<GluingKind> gluing_kind_from_string(const std::string& s);
std::optional<LeafShape> leaf_shape_from_string(const std::string& s);
std::optional<SpotDirection> spot_direction_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class HostKind { block, gluing };

/// A center (index 0/3) or conic point (index 1/2) of the foliation.
struct Singularity {
  Id id;
  int index = 0;            // Morse index, 0..3
  HostKind host_kind = HostKind::block;
  Id host;                  // block id, or connected_sum gluing id
  Id leaf;                  // optional: leaf descriptor carrying the point

  bool is_center() const { return index == 0 || index == 3; }
  bool is_conic() const { return index == 1 || index == 2; }
};

/// One leaf, or a parallel family of leaves sharing shape and flags.
struct LeafDescriptor {
  Id id;
  Id owner;                 // block whose structure carries the leaf
  LeafShape shape = LeafShape::generic;
  int genus = 0;            // only for shape == genus
  bool compact = true;
  bool simply_connected = true;
  std::vector<Id> singularities;  // conic points lying on the leaf
};

/// A transverse perfect-disc site on an otherwise tangential boundary.
struct Spot {
  Id id;
  Id owner;                 // owning block
  SpotDirection direction = SpotDirection::outward;
  Id associated_singularity;  // conic point of the disc family; may be empty
  std::string iface;          // boundary interface the site sits on, if any
  bool boundary_holonomy_trivial = true;
};

struct Assembly;

/// One foliated piece of the decomposition.
struct Block {
  Id id;
  BlockKind kind = BlockKind::center_ball;
  int genus = 0;              // product_band
  double cone_level = 0.0;    // double_cone_chart: current singular level
  std::vector<Id> spots;      // owned spots, declaration order
  std::vector<Id> singularities;  // hosted singularities
  Id host_leaf;               // attachment leaf (bubbles, balls, tb)
  Id host_block;              // attachment block (double_cone_chart)
  Id partner;                 // mutually nested bubble partner
  std::vector<Id> engulfs;    // blocks inside this bubble's interior region
  bool special = false;       // special bubble: two boundary conic points
  std::shared_ptr<Assembly> inner;  // bubble interior

  bool owns_spot(const Id& spot_id) const;
};

/// Joins two boundary interfaces or two spots.
struct Gluing {
  Id id;
  GluingKind kind = GluingKind::tangent;
  int genus = 0;              // tangent: genus of the glued surface
  Id sum_singularity;         // connected_sum: the hosted conic point
  bool perturbed = false;     // tangent: compact leaf destroyed (no-compact-leaf variant)
  // tangent endpoints are "block.iface"; spot kinds hold spot ids
  std::string a;
  std::string b;
};

struct Ambient {
  bool s3 = true;
  std::string tag;  // for non-S3 ambients

  static Ambient S3() { return Ambient{true, ""}; }
  static Ambient other(std::string t) { return Ambient{false, std::move(t)}; }
};

/// The whole foliated manifold: blocks + gluings + singularity table.
struct Assembly {
  std::string name;
  Ambient ambient = Ambient::S3();
  std::map<Id, Block> blocks;
  std::map<Id, Gluing> gluings;
  std::map<Id, Singularity> singularities;
  std::map<Id, Spot> spots;
  std::map<Id, LeafDescriptor> leaves;

  const Block* find_block(const Id& id) const;
  const Spot* find_spot(const Id& id) const;
  const Singularity* find_singularity(const Id& id) const;
  const LeafDescriptor* find_leaf(const Id& id) const;

  /// Deep copy, including bubble interiors.
  Assembly clone() const;
};

/// Witness for a vanishing or anti-vanishing cycle (Defs 3.1 / 3.5 data).
struct CycleWitness {
  enum class Kind { vanishing, anti_vanishing };
  Kind kind = Kind::vanishing;
  Id base_leaf;
  double transition_parameter = 0.0;
  // ordered (leaf id, nullhomotopic) flags along the transverse family
  std::vector<std::pair<Id, bool>> segment_flags;
  Id determined_singularity;          // anti-vanishing only
  bool implies_truncated_morse = false;  // pseudo-disc witnesses
};

// ---------------------------------------------------------------------------
// Interfaces and boundary components
// ---------------------------------------------------------------------------

/// Named tangential boundary interfaces of a block kind.
std::vector<std::string> block_interfaces(BlockKind kind);

/// Genus of one interface surface piece.
int interface_genus(const Block& block, const std::string& iface);

/// Connected-sum gluings merge boundary interfaces into composite boundary
/// components whose genus is the sum of the merged pieces.
struct BoundaryComponents {
  // interface key "block.iface" -> component root key
  std::map<std::string, std::string> component_of;
  // root key -> total genus
  std::map<std::string, int> genus;
  // root key -> tangent gluings attached to the component
  std::map<std::string, std::vector<Id>> tangent_gluings;
  // root key -> member interface keys, sorted
  std::map<std::string, std::vector<std::string>> members;
};

BoundaryComponents boundary_components(const Assembly& a);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct Violation {
  std::string rule;    // short machine-matchable code, e.g. "open interface"
  Id subject;          // offending block/gluing/spot/leaf id
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Collects every invariant violation; an empty report means valid.
ValidationReport validate(const Assembly& a);

bool is_valid(const Assembly& a);

/// True when every interface, spot and attachment is resolved.
bool is_closed(const Assembly& a);

/// Signed sum of (-1)^index over all singularities, bubble interiors included.
int index_sum(const Assembly& a);

/// Count per Morse index, bubble interiors included.
std::map<int, int> singularity_census(const Assembly& a);

int count_centers(const Assembly& a);
int count_conics(const Assembly& a);

/// Symbolic leaf census: declared leaves, synthesized block-interior
/// families where undeclared, per-gluing leaves, and center point leaves.
Result<std::vector<LeafDescriptor>> leaves(const Assembly& a);

/// Full census including bubble interiors (used by the stability decision).
std::vector<LeafDescriptor> all_leaves_recursive(const Assembly& a);

/// Structural equality of assemblies (deep, order-insensitive).
bool deep_equal(const Assembly& a, const Assembly& b);

/// True when the spot_transverse gluing lies on a cycle of the spot-gluing
/// multigraph; such an annulus closes up leaf material into a handle.
bool gluing_on_cycle(const Assembly& a, const Id& gluing_id);

}  // namespace morsefol

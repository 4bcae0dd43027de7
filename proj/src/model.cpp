#include "morsefol/model.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace morsefol {

// ---------------------------------------------------------------------------
// Enum conversions
// ---------------------------------------------------------------------------

std::string to_string(ErrCode code) {
  switch (code) {
    case ErrCode::invalid_site: return "InvalidSite";
    case ErrCode::invalid_level: return "InvalidLevel";
    case ErrCode::nothing_to_split: return "NothingToSplit";
    case ErrCode::orientation_mismatch: return "OrientationMismatch";
    case ErrCode::not_a_trivial_pair: return "NotATrivialPair";
    case ErrCode::cannot_complete: return "CannotComplete";
    case ErrCode::cannot_expand: return "CannotExpand";
    case ErrCode::not_closed: return "NotClosed";
    case ErrCode::not_normalized: return "NotNormalized";
    case ErrCode::unsupported_ambient: return "UnsupportedAmbient";
    case ErrCode::multi_singular_leaf: return "MultiSingularLeaf";
    case ErrCode::theorem_violation: return "TheoremViolation";
    case ErrCode::invalid_spec: return "InvalidSpec";
    case ErrCode::invalid_assembly: return "InvalidAssembly";
    case ErrCode::parse_error: return "ParseError";
  }
  return "UnknownError";
}

std::string to_string(BlockKind k) {
  switch (k) {
    case BlockKind::center_ball: return "center_ball";
    case BlockKind::reeb_solid_torus: return "reeb_solid_torus";
    case BlockKind::morse_solid_torus: return "morse_solid_torus";
    case BlockKind::product_band: return "product_band";
    case BlockKind::ball_with_spots: return "ball_with_spots";
    case BlockKind::bubble: return "bubble";
    case BlockKind::trivial_bubble: return "trivial_bubble";
    case BlockKind::truncated_bubble: return "truncated_bubble";
    case BlockKind::double_cone_chart: return "double_cone_chart";
    case BlockKind::truncated_reeb: return "truncated_reeb";
    case BlockKind::truncated_morse: return "truncated_morse";
  }
  return "?";
}

std::optional<BlockKind> block_kind_from_string(const std::string& s) {
  static const std::map<std::string, BlockKind> table = {
      {"center_ball", BlockKind::center_ball},
      {"reeb_solid_torus", BlockKind::reeb_solid_torus},
      {"morse_solid_torus", BlockKind::morse_solid_torus},
      {"product_band", BlockKind::product_band},
      {"ball_with_spots", BlockKind::ball_with_spots},
      {"bubble", BlockKind::bubble},
      {"trivial_bubble", BlockKind::trivial_bubble},
      {"truncated_bubble", BlockKind::truncated_bubble},
      {"double_cone_chart", BlockKind::double_cone_chart},
      {"truncated_reeb", BlockKind::truncated_reeb},
      {"truncated_morse", BlockKind::truncated_morse},
  };
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string to_string(GluingKind k) {
  switch (k) {
    case GluingKind::tangent: return "tangent";
    case GluingKind::spot_transverse: return "spot";
    case GluingKind::connected_sum: return "sum";
  }
  return "?";
}

std::optional<GluingKind> gluing_kind_from_string(const std::string& s) {
  if (s == "tangent") return GluingKind::tangent;
  if (s == "spot") return GluingKind::spot_transverse;
  if (s == "sum") return GluingKind::connected_sum;
  return std::nullopt;
}

std::string to_string(LeafShape s) {
  switch (s) {
    case LeafShape::sphere: return "sphere";
    case LeafShape::torus: return "torus";
    case LeafShape::genus: return "genus";
    case LeafShape::pseudo_torus: return "pseudo_torus";
    case LeafShape::double_cone: return "double_cone";
    case LeafShape::pseudo_disc: return "pseudo_disc";
    case LeafShape::plane: return "plane";
    case LeafShape::disc: return "disc";
    case LeafShape::annulus: return "annulus";
    case LeafShape::point: return "point";
    case LeafShape::generic: return "generic";
  }
  return "?";
}

std::optional<LeafShape> leaf_shape_from_string(const std::string& s) {
  static const std::map<std::string, LeafShape> table = {
      {"sphere", LeafShape::sphere},       {"torus", LeafShape::torus},
      {"genus", LeafShape::genus},         {"pseudo_torus", LeafShape::pseudo_torus},
      {"double_cone", LeafShape::double_cone}, {"pseudo_disc", LeafShape::pseudo_disc},
      {"plane", LeafShape::plane},         {"disc", LeafShape::disc},
      {"annulus", LeafShape::annulus},     {"point", LeafShape::point},
      {"generic", LeafShape::generic},
  };
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string to_string(SpotDirection d) {
  return d == SpotDirection::inward ? "in" : "out";
}

std::optional<SpotDirection> spot_direction_from_string(const std::string& s) {
  if (s == "in") return SpotDirection::inward;
  if (s == "out") return SpotDirection::outward;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Accessors
// ---------------------------------------------------------------------------

bool Block::owns_spot(const Id& spot_id) const {
  return std::find(spots.begin(), spots.end(), spot_id) != spots.end();
}

const Block* Assembly::find_block(const Id& id) const {
  auto it = blocks.find(id);
  return it == blocks.end() ? nullptr : &it->second;
}

const Spot* Assembly::find_spot(const Id& id) const {
  auto it = spots.find(id);
  return it == spots.end() ? nullptr : &it->second;
}

const Singularity* Assembly::find_singularity(const Id& id) const {
  auto it = singularities.find(id);
  return it == singularities.end() ? nullptr : &it->second;
}

const LeafDescriptor* Assembly::find_leaf(const Id& id) const {
  auto it = leaves.find(id);
  return it == leaves.end() ? nullptr : &it->second;
}

Assembly Assembly::clone() const {
  Assembly out = *this;  // shallow; fix up nested interiors
  for (auto& [id, block] : out.blocks) {
    if (block.inner) block.inner = std::make_shared<Assembly>(block.inner->clone());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interfaces and boundary components
// ---------------------------------------------------------------------------

std::vector<std::string> block_interfaces(BlockKind kind) {
  switch (kind) {
    case BlockKind::center_ball:
    case BlockKind::reeb_solid_torus:
    case BlockKind::morse_solid_torus:
    case BlockKind::truncated_reeb:
    case BlockKind::truncated_morse:
      return {"bdry"};
    case BlockKind::product_band:
      return {"lo", "hi"};
    default:
      return {};
  }
}

int interface_genus(const Block& block, const std::string&) {
  switch (block.kind) {
    case BlockKind::center_ball: return 0;
    case BlockKind::reeb_solid_torus:
    case BlockKind::morse_solid_torus:
    case BlockKind::truncated_reeb:
    case BlockKind::truncated_morse:
      return 1;
    case BlockKind::product_band: return block.genus;
    default: return 0;
  }
}

namespace {

std::string iface_key(const Id& block, const std::string& iface) {
  return block + "." + iface;
}

struct UnionFind {
  std::map<std::string, std::string> parent;

  void add(const std::string& x) {
    if (!parent.count(x)) parent[x] = x;
  }
  std::string find(const std::string& x) {
    add(x);
    std::string r = x;
    while (parent[r] != r) r = parent[r];
    // path compression
    std::string c = x;
    while (parent[c] != r) {
      std::string next = parent[c];
      parent[c] = r;
      c = next;
    }
    return r;
  }
  void unite(const std::string& x, const std::string& y) {
    std::string rx = find(x), ry = find(y);
    if (rx == ry) return;
    // deterministic root: lexicographically smaller wins
    if (ry < rx) std::swap(rx, ry);
    parent[ry] = rx;
  }
};

}  // namespace

BoundaryComponents boundary_components(const Assembly& a) {
  UnionFind uf;
  for (const auto& [id, block] : a.blocks)
    for (const auto& iface : block_interfaces(block.kind)) uf.add(iface_key(id, iface));

  // a connected_sum merges the interfaces its endpoint spots sit on
  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind != GluingKind::connected_sum) continue;
    const Spot* sa = a.find_spot(glue.a);
    const Spot* sb = a.find_spot(glue.b);
    if (!sa || !sb || sa->iface.empty() || sb->iface.empty()) continue;
    uf.unite(iface_key(sa->owner, sa->iface), iface_key(sb->owner, sb->iface));
  }

  BoundaryComponents out;
  for (const auto& [key, _] : uf.parent) {
    std::string root = uf.find(key);
    out.component_of[key] = root;
    out.members[root].push_back(key);
  }
  for (auto& [root, members] : out.members) std::sort(members.begin(), members.end());

  for (const auto& [id, block] : a.blocks)
    for (const auto& iface : block_interfaces(block.kind))
      out.genus[out.component_of[iface_key(id, iface)]] += interface_genus(block, iface);

  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind != GluingKind::tangent) continue;
    auto ia = out.component_of.find(glue.a);
    auto ib = out.component_of.find(glue.b);
    if (ia != out.component_of.end()) out.tangent_gluings[ia->second].push_back(gid);
    if (ib != out.component_of.end() && (ia == out.component_of.end() || ib->second != ia->second))
      out.tangent_gluings[ib->second].push_back(gid);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Census
// ---------------------------------------------------------------------------

std::map<int, int> singularity_census(const Assembly& a) {
  std::map<int, int> counts;
  for (const auto& [id, s] : a.singularities) counts[s.index]++;
  for (const auto& [id, block] : a.blocks) {
    if (!block.inner) continue;
    for (const auto& [idx, n] : singularity_census(*block.inner)) counts[idx] += n;
  }
  return counts;
}

int index_sum(const Assembly& a) {
  int sum = 0;
  for (const auto& [idx, n] : singularity_census(a)) sum += (idx % 2 == 0 ? n : -n);
  return sum;
}

int count_centers(const Assembly& a) {
  auto c = singularity_census(a);
  return c[0] + c[3];
}

int count_conics(const Assembly& a) {
  auto c = singularity_census(a);
  return c[1] + c[2];
}

// ---------------------------------------------------------------------------
// Spot-gluing multigraph cycles (symbolic leaf-annulus handles)
// ---------------------------------------------------------------------------

namespace {

// Bridge analysis on the multigraph whose nodes are blocks and whose edges
// are spot_transverse gluings. A gluing on a cycle (self-loops and parallel
// edges included) closes leaf material into a handle.
struct SpotGraph {
  std::vector<Id> edge_ids;
  std::map<Id, std::pair<Id, Id>> edges;  // gluing id -> (block, block)
  std::set<Id> cycle_edges;

  explicit SpotGraph(const Assembly& a) {
    for (const auto& [gid, glue] : a.gluings) {
      if (glue.kind != GluingKind::spot_transverse) continue;
      const Spot* sa = a.find_spot(glue.a);
      const Spot* sb = a.find_spot(glue.b);
      if (!sa || !sb) continue;
      edge_ids.push_back(gid);
      edges[gid] = {sa->owner, sb->owner};
    }
    for (const auto& gid : edge_ids)
      if (on_cycle(gid)) cycle_edges.insert(gid);
  }

  bool on_cycle(const Id& gid) const {
    auto [u, v] = edges.at(gid);
    if (u == v) return true;  // self-loop: same-ball annulus
    // non-bridge test: u and v stay connected without gid
    std::set<Id> seen{u};
    std::vector<Id> stack{u};
    while (!stack.empty()) {
      Id cur = stack.back();
      stack.pop_back();
      if (cur == v) return true;
      for (const auto& [eid, ends] : edges) {
        if (eid == gid) continue;
        Id next;
        if (ends.first == cur) next = ends.second;
        else if (ends.second == cur) next = ends.first;
        else continue;
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
    return false;
  }
};

}  // namespace

bool gluing_on_cycle(const Assembly& a, const Id& gluing_id) {
  SpotGraph graph(a);
  return graph.cycle_edges.count(gluing_id) > 0;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

void check_shape_consistency(const LeafDescriptor& leaf, ValidationReport& report) {
  bool must_be_sc = leaf.shape == LeafShape::sphere || leaf.shape == LeafShape::plane ||
                    leaf.shape == LeafShape::disc || leaf.shape == LeafShape::point;
  bool must_not_be_sc = leaf.shape == LeafShape::torus || leaf.shape == LeafShape::genus ||
                        leaf.shape == LeafShape::annulus || leaf.shape == LeafShape::pseudo_torus;
  if (must_be_sc && !leaf.simply_connected)
    report.push_back({"leaf sc mismatch", leaf.id, "shape forces simply_connected=true"});
  if (must_not_be_sc && leaf.simply_connected)
    report.push_back({"leaf sc mismatch", leaf.id, "shape forces simply_connected=false"});
  bool needs_singularity = leaf.shape == LeafShape::pseudo_torus ||
                           leaf.shape == LeafShape::double_cone ||
                           leaf.shape == LeafShape::pseudo_disc;
  if (needs_singularity && leaf.singularities.empty())
    report.push_back({"singular shape without singularity", leaf.id,
                      "pseudo/double-cone leaves must carry a conic point"});
}

void validate_into(const Assembly& a, ValidationReport& report, bool top_level);

void check_block(const Assembly& a, const Block& block, ValidationReport& report) {
  auto hosted_centers = [&] {
    int n = 0;
    for (const auto& sid : block.singularities) {
      const Singularity* s = a.find_singularity(sid);
      if (s && s->is_center()) n++;
    }
    return n;
  };
  auto hosted_conics = [&] {
    int n = 0;
    for (const auto& sid : block.singularities) {
      const Singularity* s = a.find_singularity(sid);
      if (s && s->is_conic()) n++;
    }
    return n;
  };

  for (const auto& sid : block.singularities) {
    const Singularity* s = a.find_singularity(sid);
    if (!s) {
      report.push_back({"dangling singularity", block.id, "block lists unknown singularity " + sid});
      continue;
    }
    if (s->host_kind != HostKind::block || s->host != block.id)
      report.push_back({"host mismatch", sid, "singularity host does not match listing block " + block.id});
  }
  for (const auto& pid : block.spots) {
    const Spot* p = a.find_spot(pid);
    if (!p) {
      report.push_back({"dangling spot", block.id, "block lists unknown spot " + pid});
      continue;
    }
    if (p->owner != block.id)
      report.push_back({"spot owner mismatch", pid, "spot owner differs from listing block " + block.id});
  }
  if (!block.host_leaf.empty() && !a.find_leaf(block.host_leaf))
    report.push_back({"dangling host leaf", block.id, "host leaf " + block.host_leaf + " not in table"});
  if (!block.host_block.empty() && !a.find_block(block.host_block))
    report.push_back({"dangling host block", block.id, "host block " + block.host_block + " not in table"});

  switch (block.kind) {
    case BlockKind::center_ball:
      if (hosted_centers() != 1 || hosted_conics() != 0)
        report.push_back({"bad contents", block.id, "center_ball hosts exactly one center"});
      break;
    case BlockKind::reeb_solid_torus:
      if (!block.singularities.empty())
        report.push_back({"bad contents", block.id, "reeb_solid_torus hosts no singularities"});
      break;
    case BlockKind::morse_solid_torus:
      if (hosted_centers() != 1 || hosted_conics() != 1)
        report.push_back({"bad contents", block.id, "morse_solid_torus hosts one center and one conic point"});
      break;
    case BlockKind::product_band:
      if (!block.singularities.empty())
        report.push_back({"bad contents", block.id, "product_band hosts no singularities"});
      if (block.genus < 0)
        report.push_back({"bad genus", block.id, "product_band genus must be >= 0"});
      break;
    case BlockKind::ball_with_spots: {
      if (block.spots.empty())
        report.push_back({"bad contents", block.id, "ball_with_spots needs at least one spot"});
      for (const auto& pid : block.spots) {
        const Spot* p = a.find_spot(pid);
        if (p && !p->boundary_holonomy_trivial)
          report.push_back({"nontrivial holonomy", pid, "perfect-disc spots have trivial boundary holonomy"});
      }
      if (block.host_leaf.empty())
        report.push_back({"missing host leaf", block.id, "ball_with_spots attaches along a leaf"});
      break;
    }
    case BlockKind::bubble: {
      if (block.host_leaf.empty())
        report.push_back({"missing host leaf", block.id, "bubble attaches to a singular leaf"});
      int boundary_conics = hosted_conics();
      if (block.special) {
        if (boundary_conics != 2)
          report.push_back({"bad contents", block.id, "special bubble carries two boundary conic points"});
      } else {
        if (boundary_conics != 1 || hosted_centers() != 0)
          report.push_back({"bad contents", block.id, "bubble carries exactly one boundary conic point"});
        if (block.inner) {
          if (block.inner->singularities.empty())
            report.push_back({"trivial interior", block.id, "bubble interior has an empty singularity table"});
          if (block.inner->ambient.s3)
            report.push_back({"bad interior ambient", block.id, "bubble interior is not an S3 assembly"});
          validate_into(*block.inner, report, false);
        } else if (block.partner.empty()) {
          // a mutually nested pair is non-trivial through its partner
          report.push_back({"trivial interior", block.id, "bubble requires a non-trivial interior assembly"});
        }
      }
      if (!block.partner.empty()) {
        const Block* partner = a.find_block(block.partner);
        if (!partner || partner->kind != BlockKind::bubble || partner->partner != block.id)
          report.push_back({"bad partner", block.id, "mutually nested bubbles must point at each other"});
        if (std::find(block.engulfs.begin(), block.engulfs.end(), block.partner) ==
            block.engulfs.end())
          report.push_back({"bad partner", block.id, "partner bubble must lie in the engulfed region"});
      }
      for (const auto& bid : block.engulfs)
        if (!a.find_block(bid))
          report.push_back({"dangling reference", block.id, "engulfed block " + bid + " missing"});
      if (block.special) {
        // a special bubble's conic points lie on its own sphere leaves
        for (const auto& sid : block.singularities) {
          const Singularity* s = a.find_singularity(sid);
          const LeafDescriptor* leaf = s ? a.find_leaf(s->leaf) : nullptr;
          if (!leaf || leaf->owner != block.id)
            report.push_back({"host leaf missing conic", block.id,
                              "special bubble conic " + sid + " must lie on a leaf of the bubble"});
        }
      } else if (const LeafDescriptor* host = a.find_leaf(block.host_leaf)) {
        // the boundary conic point lies on the host leaf
        for (const auto& sid : block.singularities) {
          if (std::find(host->singularities.begin(), host->singularities.end(), sid) ==
              host->singularities.end())
            report.push_back({"host leaf missing conic", block.id,
                              "host leaf does not record boundary conic " + sid});
        }
      }
      break;
    }
    case BlockKind::trivial_bubble: {
      if (hosted_centers() != 1 || hosted_conics() != 1)
        report.push_back({"bad contents", block.id, "trivial_bubble hosts one center and one boundary conic"});
      if (block.host_leaf.empty())
        report.push_back({"missing host leaf", block.id, "trivial_bubble attaches to a leaf"});
      if (const LeafDescriptor* host = a.find_leaf(block.host_leaf)) {
        for (const auto& sid : block.singularities) {
          const Singularity* s = a.find_singularity(sid);
          if (s && s->is_conic() &&
              std::find(host->singularities.begin(), host->singularities.end(), sid) ==
                  host->singularities.end())
            report.push_back({"host leaf missing conic", block.id,
                              "host leaf does not record boundary conic " + sid});
        }
      }
      break;
    }
    case BlockKind::truncated_bubble: {
      if (block.spots.size() < 2)
        report.push_back({"bad contents", block.id, "truncated_bubble needs at least two spots"});
      bool has_in = false, has_out = false;
      std::set<Id> assoc;
      for (const auto& pid : block.spots) {
        const Spot* p = a.find_spot(pid);
        if (!p) continue;
        (p->direction == SpotDirection::inward ? has_in : has_out) = true;
        if (p->associated_singularity.empty()) {
          report.push_back({"unassociated spot", pid, "truncated_bubble spots carry distinct conic points"});
        } else if (!assoc.insert(p->associated_singularity).second) {
          report.push_back({"shared spot singularity", block.id,
                            "truncated_bubble spots must have pairwise distinct conic points"});
        }
      }
      if (!has_in || !has_out)
        report.push_back({"one-sided truncated bubble", block.id,
                          "truncated_bubble needs an inward and an outward spot"});
      if (block.host_leaf.empty()) {
        report.push_back({"missing host leaf", block.id, "truncated_bubble tangent boundary lies in a leaf"});
      } else if (const LeafDescriptor* host = a.find_leaf(block.host_leaf)) {
        if (!host->singularities.empty())
          report.push_back({"singular tangent boundary", block.id,
                            "truncated_bubble tangent boundary must avoid conic points"});
      }
      break;
    }
    case BlockKind::double_cone_chart:
      if (hosted_conics() != 1 || hosted_centers() != 0)
        report.push_back({"bad contents", block.id, "double_cone_chart hosts exactly one conic point"});
      if (block.host_block.empty())
        report.push_back({"missing host block", block.id, "double_cone_chart sits inside a host block"});
      break;
    case BlockKind::truncated_reeb:
      if (!block.singularities.empty())
        report.push_back({"bad contents", block.id, "truncated_reeb hosts no singularities"});
      if (block.spots.size() != 1)
        report.push_back({"bad contents", block.id, "truncated component carries exactly one spot"});
      break;
    case BlockKind::truncated_morse:
      if (hosted_centers() != 1 || hosted_conics() != 1)
        report.push_back({"bad contents", block.id, "truncated_morse hosts one center and one conic point"});
      if (block.spots.size() != 1)
        report.push_back({"bad contents", block.id, "truncated component carries exactly one spot"});
      break;
  }
}

void check_gluing(const Assembly& a, const Gluing& glue, const BoundaryComponents& bc,
                  ValidationReport& report) {
  if (glue.kind == GluingKind::tangent) {
    for (const std::string& end : {glue.a, glue.b}) {
      auto dot = end.find('.');
      if (dot == std::string::npos) {
        report.push_back({"bad endpoint", glue.id, "tangent endpoint must be block.iface: " + end});
        continue;
      }
      Id bid = end.substr(0, dot);
      std::string iface = end.substr(dot + 1);
      const Block* block = a.find_block(bid);
      if (!block) {
        report.push_back({"dangling reference", glue.id, "unknown block " + bid});
        continue;
      }
      auto ifaces = block_interfaces(block->kind);
      if (std::find(ifaces.begin(), ifaces.end(), iface) == ifaces.end())
        report.push_back({"bad endpoint", glue.id, "block " + bid + " has no interface " + iface});
    }
    auto ca = bc.component_of.find(glue.a);
    auto cb = bc.component_of.find(glue.b);
    if (ca != bc.component_of.end() && cb != bc.component_of.end()) {
      if (bc.genus.at(ca->second) != glue.genus || bc.genus.at(cb->second) != glue.genus)
        report.push_back({"genus mismatch", glue.id, "tangent gluing genus differs from boundary genus"});
    }
    return;
  }

  const Spot* sa = a.find_spot(glue.a);
  const Spot* sb = a.find_spot(glue.b);
  if (!sa || !sb) {
    report.push_back({"dangling reference", glue.id, "gluing endpoint spot missing"});
    return;
  }
  if (sa->direction == sb->direction)
    report.push_back({"orientation mismatch", glue.id, "spot gluings join opposite directions"});
  if (glue.kind == GluingKind::connected_sum) {
    const Singularity* s = a.find_singularity(glue.sum_singularity);
    if (!s)
      report.push_back({"dangling reference", glue.id, "connected_sum singularity missing"});
    else if (!s->is_conic())
      report.push_back({"bad sum singularity", glue.id, "connected_sum hosts a conic point"});
    else if (s->host_kind != HostKind::gluing || s->host != glue.id)
      report.push_back({"host mismatch", glue.sum_singularity, "sum singularity host is not this gluing"});
  } else if (!glue.sum_singularity.empty()) {
    report.push_back({"bad sum singularity", glue.id, "spot_transverse gluings host no singularity"});
  }
}

void check_closedness(const Assembly& a, const BoundaryComponents& bc, ValidationReport& report) {
  for (const auto& [root, members] : bc.members) {
    auto it = bc.tangent_gluings.find(root);
    size_t glued = it == bc.tangent_gluings.end() ? 0 : it->second.size();
    if (glued == 0)
      report.push_back({"open interface", members.front(), "boundary component is not glued"});
    else if (glued > 1)
      report.push_back({"doubly glued interface", members.front(),
                        "boundary component participates in multiple tangent gluings"});
  }
  std::map<Id, int> spot_use;
  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind == GluingKind::tangent) continue;
    spot_use[glue.a]++;
    spot_use[glue.b]++;
  }
  for (const auto& [pid, spot] : a.spots) {
    int n = spot_use.count(pid) ? spot_use[pid] : 0;
    if (n == 0)
      report.push_back({"unglued spot", pid, "spot participates in no gluing"});
    else if (n > 1)
      report.push_back({"doubly glued spot", pid, "spot participates in several gluings"});
  }
}

void check_connectivity(const Assembly& a, ValidationReport& report) {
  if (a.blocks.size() <= 1) return;
  std::map<Id, std::vector<Id>> adj;
  auto link = [&](const Id& x, const Id& y) {
    adj[x].push_back(y);
    adj[y].push_back(x);
  };
  for (const auto& [gid, glue] : a.gluings) {
    Id ba, bb;
    if (glue.kind == GluingKind::tangent) {
      ba = glue.a.substr(0, glue.a.find('.'));
      bb = glue.b.substr(0, glue.b.find('.'));
    } else {
      const Spot* sa = a.find_spot(glue.a);
      const Spot* sb = a.find_spot(glue.b);
      if (!sa || !sb) continue;
      ba = sa->owner;
      bb = sb->owner;
    }
    if (a.find_block(ba) && a.find_block(bb)) link(ba, bb);
  }
  for (const auto& [bid, block] : a.blocks) {
    if (!block.host_leaf.empty())
      if (const LeafDescriptor* leaf = a.find_leaf(block.host_leaf))
        if (a.find_block(leaf->owner)) link(bid, leaf->owner);
    if (!block.host_block.empty() && a.find_block(block.host_block)) link(bid, block.host_block);
  }
  std::set<Id> seen;
  std::vector<Id> stack{a.blocks.begin()->first};
  seen.insert(stack.back());
  while (!stack.empty()) {
    Id cur = stack.back();
    stack.pop_back();
    for (const auto& next : adj[cur])
      if (seen.insert(next).second) stack.push_back(next);
  }
  if (seen.size() != a.blocks.size())
    for (const auto& [bid, block] : a.blocks)
      if (!seen.count(bid)) {
        report.push_back({"disconnected", bid, "block graph is not connected"});
        break;
      }
}

void validate_into(const Assembly& a, ValidationReport& report, bool top_level) {
  // singularity table
  for (const auto& [sid, s] : a.singularities) {
    if (s.index < 0 || s.index > 3)
      report.push_back({"bad index", sid, "Morse index must lie in {0,1,2,3}"});
    if (s.host_kind == HostKind::block) {
      const Block* host = a.find_block(s.host);
      if (!host)
        report.push_back({"dangling reference", sid, "host block " + s.host + " missing"});
      else if (std::find(host->singularities.begin(), host->singularities.end(), sid) ==
               host->singularities.end())
        report.push_back({"host mismatch", sid, "host block does not list this singularity"});
    } else {
      const auto it = a.gluings.find(s.host);
      if (it == a.gluings.end())
        report.push_back({"dangling reference", sid, "host gluing " + s.host + " missing"});
      else if (it->second.kind != GluingKind::connected_sum || it->second.sum_singularity != sid)
        report.push_back({"host mismatch", sid, "host gluing is not a connected_sum carrying it"});
    }
    if (!s.leaf.empty()) {
      const LeafDescriptor* leaf = a.find_leaf(s.leaf);
      if (!leaf)
        report.push_back({"dangling reference", sid, "leaf " + s.leaf + " missing"});
      else if (std::find(leaf->singularities.begin(), leaf->singularities.end(), sid) ==
               leaf->singularities.end())
        report.push_back({"leaf mismatch", sid, "leaf does not list this singularity"});
    }
  }

  // spots
  for (const auto& [pid, spot] : a.spots) {
    const Block* owner = a.find_block(spot.owner);
    if (!owner) {
      report.push_back({"dangling reference", pid, "spot owner " + spot.owner + " missing"});
    } else if (!owner->owns_spot(pid)) {
      report.push_back({"spot owner mismatch", pid, "owner block does not list this spot"});
    }
    if (!spot.associated_singularity.empty()) {
      const Singularity* s = a.find_singularity(spot.associated_singularity);
      if (!s)
        report.push_back({"dangling reference", pid, "associated singularity missing"});
      else if (!s->is_conic())
        report.push_back({"bad association", pid, "spots are associated with conic points"});
    }
    if (owner && !spot.iface.empty()) {
      auto ifaces = block_interfaces(owner->kind);
      if (std::find(ifaces.begin(), ifaces.end(), spot.iface) == ifaces.end())
        report.push_back({"bad endpoint", pid, "spot interface " + spot.iface + " unknown"});
    }
  }

  // leaves
  for (const auto& [lid, leaf] : a.leaves) {
    if (!leaf.owner.empty() && !a.find_block(leaf.owner))
      report.push_back({"dangling reference", lid, "leaf owner " + leaf.owner + " missing"});
    for (const auto& sid : leaf.singularities)
      if (!a.find_singularity(sid))
        report.push_back({"dangling reference", lid, "leaf lists unknown singularity " + sid});
    check_shape_consistency(leaf, report);
  }

  // blocks (recurses into bubble interiors)
  for (const auto& [bid, block] : a.blocks) check_block(a, block, report);

  // gluings
  BoundaryComponents bc = boundary_components(a);
  for (const auto& [gid, glue] : a.gluings) check_gluing(a, glue, bc, report);

  // every singularity hosted exactly once is implied by the host checks plus
  // table uniqueness; closure and the index sum apply to the top S3 assembly
  if (top_level && a.ambient.s3) {
    check_closedness(a, bc, report);
    if (index_sum(a) != 0)
      report.push_back({"index sum", a.name, "signed index sum over S3 must vanish"});
  }
  check_connectivity(a, report);
}

}  // namespace

ValidationReport validate(const Assembly& a) {
  ValidationReport report;
  validate_into(a, report, true);
  return report;
}

bool is_valid(const Assembly& a) { return validate(a).empty(); }

bool is_closed(const Assembly& a) {
  ValidationReport report;
  BoundaryComponents bc = boundary_components(a);
  check_closedness(a, bc, report);
  for (const auto& [bid, block] : a.blocks) {
    bool needs_leaf = block.kind == BlockKind::bubble || block.kind == BlockKind::trivial_bubble ||
                      block.kind == BlockKind::ball_with_spots ||
                      block.kind == BlockKind::truncated_bubble;
    if (needs_leaf && block.host_leaf.empty()) return false;
    if (block.kind == BlockKind::double_cone_chart && block.host_block.empty()) return false;
  }
  return report.empty();
}

// ---------------------------------------------------------------------------
// Leaf census
// ---------------------------------------------------------------------------

namespace {

LeafDescriptor family_leaf(const Id& id, const Id& owner, LeafShape shape, bool compact, bool sc,
                           int genus = 0) {
  LeafDescriptor leaf;
  leaf.id = id;
  leaf.owner = owner;
  leaf.shape = shape;
  leaf.genus = genus;
  leaf.compact = compact;
  leaf.simply_connected = sc;
  return leaf;
}

// Interior leaf families of a block, synthesized when the table declares
// nothing for it.
std::vector<LeafDescriptor> interior_families(const Block& block) {
  const Id& b = block.id;
  switch (block.kind) {
    case BlockKind::center_ball:
      return {family_leaf(b + ":spheres", b, LeafShape::sphere, true, true)};
    case BlockKind::reeb_solid_torus:
    case BlockKind::truncated_reeb:
      return {family_leaf(b + ":planes", b, LeafShape::plane, false, true)};
    case BlockKind::morse_solid_torus:
    case BlockKind::truncated_morse: {
      auto spheres = family_leaf(b + ":spheres", b, LeafShape::sphere, true, true);
      auto tori = family_leaf(b + ":tori", b, LeafShape::torus, true, false);
      auto pt = family_leaf(b + ":pseudo_torus", b, LeafShape::pseudo_torus, true, false);
      for (const auto& sid : block.singularities) pt.singularities.push_back(sid);
      return {spheres, tori, pt};
    }
    case BlockKind::product_band: {
      LeafShape shape = block.genus == 0   ? LeafShape::sphere
                        : block.genus == 1 ? LeafShape::torus
                                           : LeafShape::genus;
      return {family_leaf(b + ":band", b, shape, true, block.genus == 0, block.genus)};
    }
    case BlockKind::ball_with_spots:
    case BlockKind::truncated_bubble:
      return {family_leaf(b + ":discs", b, LeafShape::disc, true, true)};
    case BlockKind::double_cone_chart: {
      auto cone = family_leaf(b + ":cone", b, LeafShape::double_cone, true, true);
      for (const auto& sid : block.singularities) cone.singularities.push_back(sid);
      return {cone};
    }
    case BlockKind::bubble:
    case BlockKind::trivial_bubble:
      return {};  // boundary belongs to the host leaf; interiors are nested
  }
  return {};
}

}  // namespace

Result<std::vector<LeafDescriptor>> leaves(const Assembly& a) {
  ValidationReport report = validate(a);
  if (!report.empty())
    return Error{ErrCode::invalid_assembly,
                 "assembly is invalid: " + report.front().rule + " (" + report.front().subject + ")"};

  std::vector<LeafDescriptor> out;
  std::set<Id> declared_owners;
  for (const auto& [lid, leaf] : a.leaves) {
    out.push_back(leaf);
    declared_owners.insert(leaf.owner);
  }
  for (const auto& [bid, block] : a.blocks) {
    if (declared_owners.count(bid)) continue;
    for (auto& leaf : interior_families(block)) out.push_back(std::move(leaf));
  }
  // centers are point leaves
  for (const auto& [sid, s] : a.singularities) {
    if (!s.is_center()) continue;
    auto leaf = family_leaf("center:" + sid, s.host_kind == HostKind::block ? s.host : Id{},
                            LeafShape::point, true, true);
    leaf.singularities.push_back(sid);
    out.push_back(std::move(leaf));
  }
  // tangent gluings contribute one compact leaf of the gluing's genus;
  // the perturbed variant spirals the two sides into a non-compact leaf
  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind == GluingKind::tangent) {
      LeafShape shape = glue.genus == 0   ? LeafShape::sphere
                        : glue.genus == 1 ? LeafShape::torus
                                          : LeafShape::genus;
      if (glue.perturbed) {
        out.push_back(family_leaf("glue:" + gid, Id{}, LeafShape::generic, false, false));
      } else {
        out.push_back(family_leaf("glue:" + gid, Id{}, shape, true, glue.genus == 0, glue.genus));
      }
    } else if (glue.kind == GluingKind::connected_sum) {
      auto leaf = family_leaf("glue:" + gid, Id{}, LeafShape::double_cone, false, true);
      leaf.singularities.push_back(glue.sum_singularity);
      out.push_back(std::move(leaf));
    } else {
      // annulus continuation; a cycle closes leaf material into a handle
      bool handle = gluing_on_cycle(a, gid);
      out.push_back(handle ? family_leaf("glue:" + gid, Id{}, LeafShape::annulus, true, false)
                           : family_leaf("glue:" + gid, Id{}, LeafShape::sphere, true, true));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const LeafDescriptor& x, const LeafDescriptor& y) { return x.id < y.id; });
  return out;
}

std::vector<LeafDescriptor> all_leaves_recursive(const Assembly& a) {
  std::vector<LeafDescriptor> out;
  auto census = leaves(a);
  if (census.ok()) {
    out = census.take();
  } else {
    for (const auto& [lid, leaf] : a.leaves) out.push_back(leaf);
  }
  for (const auto& [bid, block] : a.blocks) {
    if (!block.inner) continue;
    for (auto& leaf : all_leaves_recursive(*block.inner)) {
      leaf.id = bid + "/" + leaf.id;
      out.push_back(std::move(leaf));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

namespace {

bool leaf_equal(const LeafDescriptor& x, const LeafDescriptor& y) {
  return x.id == y.id && x.owner == y.owner && x.shape == y.shape && x.genus == y.genus &&
         x.compact == y.compact && x.simply_connected == y.simply_connected &&
         x.singularities == y.singularities;
}

bool block_equal(const Block& x, const Block& y) {
  if (!(x.id == y.id && x.kind == y.kind && x.genus == y.genus && x.cone_level == y.cone_level &&
        x.spots == y.spots && x.singularities == y.singularities && x.host_leaf == y.host_leaf &&
        x.host_block == y.host_block && x.partner == y.partner && x.engulfs == y.engulfs &&
        x.special == y.special))
    return false;
  if (!x.inner != !y.inner) return false;
  return !x.inner || deep_equal(*x.inner, *y.inner);
}

}  // namespace

bool deep_equal(const Assembly& a, const Assembly& b) {
  if (a.name != b.name || a.ambient.s3 != b.ambient.s3 || a.ambient.tag != b.ambient.tag)
    return false;
  if (a.blocks.size() != b.blocks.size() || a.gluings.size() != b.gluings.size() ||
      a.singularities.size() != b.singularities.size() || a.spots.size() != b.spots.size() ||
      a.leaves.size() != b.leaves.size())
    return false;
  for (const auto& [bid, block] : a.blocks) {
    const Block* other = b.find_block(bid);
    if (!other || !block_equal(block, *other)) return false;
  }
  for (const auto& [gid, glue] : a.gluings) {
    auto it = b.gluings.find(gid);
    if (it == b.gluings.end()) return false;
    const Gluing& o = it->second;
    if (!(glue.kind == o.kind && glue.genus == o.genus && glue.sum_singularity == o.sum_singularity &&
          glue.perturbed == o.perturbed && glue.a == o.a && glue.b == o.b))
      return false;
  }
  for (const auto& [sid, s] : a.singularities) {
    const Singularity* o = b.find_singularity(sid);
    if (!o || !(s.index == o->index && s.host_kind == o->host_kind && s.host == o->host &&
                s.leaf == o->leaf))
      return false;
  }
  for (const auto& [pid, p] : a.spots) {
    const Spot* o = b.find_spot(pid);
    if (!o || !(p.owner == o->owner && p.direction == o->direction &&
                p.associated_singularity == o->associated_singularity && p.iface == o->iface &&
                p.boundary_holonomy_trivial == o->boundary_holonomy_trivial))
      return false;
  }
  for (const auto& [lid, leaf] : a.leaves) {
    const LeafDescriptor* o = b.find_leaf(lid);
    if (!o || !leaf_equal(leaf, *o)) return false;
  }
  return true;
}

}  // namespace morsefol

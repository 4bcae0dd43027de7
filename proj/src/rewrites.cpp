#include "morsefol/rewrites.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "morsefol/detect.hpp"

namespace morsefol {

namespace {

std::string fmt_level(double level) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", level);
  return buf;
}

Assembly* assembly_with_block(Assembly& root, const Id& id) {
  if (root.blocks.count(id)) return &root;
  for (auto& [bid, block] : root.blocks)
    if (block.inner)
      if (Assembly* found = assembly_with_block(*block.inner, id)) return found;
  return nullptr;
}

Assembly* assembly_with_leaf(Assembly& root, const Id& id) {
  if (root.leaves.count(id)) return &root;
  for (auto& [bid, block] : root.blocks)
    if (block.inner)
      if (Assembly* found = assembly_with_leaf(*block.inner, id)) return found;
  return nullptr;
}

std::map<int, int> census_delta(const std::map<int, int>& before, const Assembly& after) {
  std::map<int, int> delta;
  for (const auto& [idx, n] : singularity_census(after)) delta[idx] += n;
  for (const auto& [idx, n] : before) delta[idx] -= n;
  for (auto it = delta.begin(); it != delta.end();)
    it = it->second == 0 ? delta.erase(it) : std::next(it);
  return delta;
}

const Gluing* gluing_of_spot(const Assembly& a, const Id& spot) {
  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind == GluingKind::tangent) continue;
    if (glue.a == spot || glue.b == spot) return &glue;
  }
  return nullptr;
}

void erase_from(std::vector<Id>& xs, const Id& x) {
  xs.erase(std::remove(xs.begin(), xs.end(), x), xs.end());
}

// Remove a singularity and every reference to it inside one assembly.
void detach_singularity(Assembly& a, const Id& sid) {
  auto it = a.singularities.find(sid);
  if (it != a.singularities.end()) {
    if (it->second.host_kind == HostKind::block) {
      auto host = a.blocks.find(it->second.host);
      if (host != a.blocks.end()) erase_from(host->second.singularities, sid);
    }
    a.singularities.erase(it);
  }
  for (auto& [lid, leaf] : a.leaves) erase_from(leaf.singularities, sid);
  for (auto& [pid, spot] : a.spots)
    if (spot.associated_singularity == sid) spot.associated_singularity.clear();
}

void remove_spot(Assembly& a, const Id& pid) {
  auto it = a.spots.find(pid);
  if (it != a.spots.end()) {
    auto owner = a.blocks.find(it->second.owner);
    if (owner != a.blocks.end()) erase_from(owner->second.spots, pid);
    a.spots.erase(it);
  }
}

// Drop a block plus its owned spots, hosted singularities and leaf families.
void remove_block_cascade(Assembly& a, const Id& bid) {
  auto it = a.blocks.find(bid);
  if (it == a.blocks.end()) return;
  Block block = it->second;
  for (const auto& sid : std::vector<Id>(block.singularities)) detach_singularity(a, sid);
  for (const auto& pid : std::vector<Id>(block.spots)) remove_spot(a, pid);
  for (auto lit = a.leaves.begin(); lit != a.leaves.end();)
    lit = lit->second.owner == bid ? a.leaves.erase(lit) : std::next(lit);
  a.blocks.erase(bid);
}

// Consume one spot of `block_spot` together with its gluing and the spot on
// the other end; dissolve the partner ball when this empties it.
void consume_spot_pair(Assembly& a, const Id& block_spot, bool drop_partner_singularities) {
  const Gluing* glue = gluing_of_spot(a, block_spot);
  Id partner;
  if (glue) {
    partner = glue->a == block_spot ? glue->b : glue->a;
    a.gluings.erase(glue->id);
  }
  remove_spot(a, block_spot);
  if (partner.empty()) return;
  auto it = a.spots.find(partner);
  Id partner_owner = it == a.spots.end() ? Id{} : it->second.owner;
  remove_spot(a, partner);
  if (partner_owner.empty()) return;
  auto bit = a.blocks.find(partner_owner);
  if (bit == a.blocks.end() || bit->second.kind != BlockKind::ball_with_spots) return;
  if (!bit->second.spots.empty()) return;
  if (drop_partner_singularities)
    remove_block_cascade(a, partner_owner);
  else if (bit->second.singularities.empty())
    remove_block_cascade(a, partner_owner);
}

}  // namespace

// ---------------------------------------------------------------------------
// Morse modifications
// ---------------------------------------------------------------------------

namespace {

RewriteResult morse_mod(const Assembly& a, const Id& chart, double level, bool type_a) {
  Assembly out = a.clone();
  Assembly* host = assembly_with_block(out, chart);
  if (!host) return Error{ErrCode::invalid_site, "no block " + chart};
  Block& block = host->blocks[chart];
  if (block.kind != BlockKind::double_cone_chart)
    return Error{ErrCode::invalid_site, chart + " is not a double_cone_chart"};
  if (type_a && !(level < block.cone_level))
    return Error{ErrCode::invalid_level, "modification (A) relocates the cone to the disc-pair side"};
  if (!type_a && !(level > block.cone_level))
    return Error{ErrCode::invalid_level, "modification (B) relocates the cone to the cylinder side"};
  block.cone_level = level;

  RewriteStep step;
  step.op = type_a ? "morse_mod_a" : "morse_mod_b";
  step.consumed = {chart};
  step.produced = {chart};
  step.params["site"] = chart;
  step.params["level"] = fmt_level(level);
  return Rewritten<>{std::move(out), std::move(step)};
}

}  // namespace

RewriteResult morse_mod_a(const Assembly& a, const Id& chart, double level) {
  return morse_mod(a, chart, level, true);
}

RewriteResult morse_mod_b(const Assembly& a, const Id& chart, double level) {
  return morse_mod(a, chart, level, false);
}

// ---------------------------------------------------------------------------
// Leaf splitting
// ---------------------------------------------------------------------------

RewriteResult split_singular_leaf(const Assembly& a, const Id& leaf_id) {
  Assembly out = a.clone();
  Assembly* host = assembly_with_leaf(out, leaf_id);
  if (!host) return Error{ErrCode::invalid_site, "no leaf " + leaf_id};
  LeafDescriptor leaf = host->leaves[leaf_id];

  std::vector<Id> conics, others;
  for (const auto& sid : leaf.singularities) {
    const Singularity* s = host->find_singularity(sid);
    (s && s->is_conic() ? conics : others).push_back(sid);
  }
  if (conics.size() < 2)
    return Error{ErrCode::nothing_to_split, "leaf " + leaf_id + " carries at most one conic point"};

  RewriteStep step;
  step.op = "split_singular_leaf";
  step.consumed = {leaf_id};
  step.params["site"] = leaf_id;

  // one leaf per conic point; attachments without a conic of their own and
  // leftover non-conic references keep a residual copy
  std::map<Id, Id> split_of;  // conic -> new leaf id
  int n = 0;
  for (const auto& sid : conics) {
    LeafDescriptor piece = leaf;
    piece.id = leaf_id + "#" + std::to_string(++n);
    piece.singularities = {sid};
    split_of[sid] = piece.id;
    step.produced.push_back(piece.id);
    host->leaves[piece.id] = std::move(piece);
    host->singularities[sid].leaf = split_of[sid];
  }

  bool residual_needed = !others.empty();
  for (const auto& [bid, block] : host->blocks)
    if (block.host_leaf == leaf_id) {
      bool has_own = false;
      for (const auto& sid : block.singularities)
        if (split_of.count(sid)) has_own = true;
      if (!has_own) residual_needed = true;
    }
  Id residual;
  if (residual_needed) {
    LeafDescriptor piece = leaf;
    residual = leaf_id + "#0";
    piece.id = residual;
    piece.singularities = others;
    step.produced.push_back(residual);
    host->leaves[residual] = std::move(piece);
    for (const auto& sid : others) host->singularities[sid].leaf = residual;
  }

  for (auto& [bid, block] : host->blocks) {
    if (block.host_leaf != leaf_id) continue;
    Id target = residual;
    for (const auto& sid : block.singularities)
      if (split_of.count(sid)) target = split_of[sid];
    block.host_leaf = target;
  }
  host->leaves.erase(leaf_id);
  return Rewritten<>{std::move(out), std::move(step)};
}

// ---------------------------------------------------------------------------
// Connected sum
// ---------------------------------------------------------------------------

namespace {

bool spot_in_interior(const Assembly& a, const Id& spot) {
  for (const auto& [bid, block] : a.blocks)
    if (block.inner && (block.inner->spots.count(spot) || spot_in_interior(*block.inner, spot)))
      return true;
  return false;
}

}  // namespace

RewriteResult connected_sum(const Assembly& a1, const Assembly& a2, const Id& spot1,
                            const Id& spot2, int new_conic_index) {
  const Spot* s1 = a1.find_spot(spot1);
  const Spot* s2 = a2.find_spot(spot2);
  if (!s1)
    return Error{ErrCode::invalid_site, spot_in_interior(a1, spot1)
                                            ? spot1 + " lies inside a bubble interior"
                                            : "no spot " + spot1};
  if (!s2)
    return Error{ErrCode::invalid_site, spot_in_interior(a2, spot2)
                                            ? spot2 + " lies inside a bubble interior"
                                            : "no spot " + spot2};
  if (s1->direction == s2->direction)
    return Error{ErrCode::orientation_mismatch, "connected sum joins spots of opposite direction"};
  if (!s1->associated_singularity.empty() || !s2->associated_singularity.empty())
    return Error{ErrCode::invalid_site, "sum sites must be free trivially foliated discs"};
  if (new_conic_index != 1 && new_conic_index != 2)
    return Error{ErrCode::invalid_spec, "the new conic point has index 1 or 2"};

  for (const auto& [id, _] : a2.blocks)
    if (a1.blocks.count(id)) return Error{ErrCode::invalid_spec, "block id collision: " + id};
  for (const auto& [id, _] : a2.spots)
    if (a1.spots.count(id)) return Error{ErrCode::invalid_spec, "spot id collision: " + id};
  for (const auto& [id, _] : a2.singularities)
    if (a1.singularities.count(id)) return Error{ErrCode::invalid_spec, "singularity id collision: " + id};
  for (const auto& [id, _] : a2.gluings)
    if (a1.gluings.count(id)) return Error{ErrCode::invalid_spec, "gluing id collision: " + id};
  for (const auto& [id, _] : a2.leaves)
    if (a1.leaves.count(id)) return Error{ErrCode::invalid_spec, "leaf id collision: " + id};

  Assembly out = a1.clone();
  Assembly rhs = a2.clone();
  out.name = a1.name + "#" + a2.name;
  out.ambient = Ambient::other(out.name);
  out.blocks.insert(rhs.blocks.begin(), rhs.blocks.end());
  out.gluings.insert(rhs.gluings.begin(), rhs.gluings.end());
  out.singularities.insert(rhs.singularities.begin(), rhs.singularities.end());
  out.spots.insert(rhs.spots.begin(), rhs.spots.end());
  out.leaves.insert(rhs.leaves.begin(), rhs.leaves.end());

  Id gid = "sum:" + spot1 + "+" + spot2;
  Id sid = gid + ":s";
  Gluing glue;
  glue.id = gid;
  glue.kind = GluingKind::connected_sum;
  glue.sum_singularity = sid;
  glue.a = spot1;
  glue.b = spot2;
  out.gluings[gid] = std::move(glue);

  Singularity sing;
  sing.id = sid;
  sing.index = new_conic_index;
  sing.host_kind = HostKind::gluing;
  sing.host = gid;
  out.singularities[sid] = std::move(sing);

  out.spots[spot1].associated_singularity = sid;
  out.spots[spot2].associated_singularity = sid;

  RewriteStep step;
  step.op = "connected_sum";
  step.consumed = {spot1, spot2};
  step.produced = {gid, sid};
  step.singularity_delta[new_conic_index] = 1;
  step.params["spot1"] = spot1;
  step.params["spot2"] = spot2;
  step.params["index"] = std::to_string(new_conic_index);
  return Rewritten<>{std::move(out), std::move(step)};
}

// ---------------------------------------------------------------------------
// Trivial pair elimination
// ---------------------------------------------------------------------------

namespace {

// Locates the assembly + trivial-bubble-like block for the pair, if any.
struct TrivialPairSite {
  Assembly* host = nullptr;
  Id block;
  bool through_bubble = false;  // pattern: bubble with trivialized interior
};

TrivialPairSite locate_trivial_pair(Assembly& root, const Id& center, const Id& conic) {
  TrivialPairSite site;
  for (auto& [bid, block] : root.blocks) {
    if (block.kind == BlockKind::trivial_bubble) {
      bool has_center = std::find(block.singularities.begin(), block.singularities.end(),
                                  center) != block.singularities.end();
      bool has_conic = std::find(block.singularities.begin(), block.singularities.end(), conic) !=
                       block.singularities.end();
      if (has_center && has_conic) {
        site.host = &root;
        site.block = bid;
        return site;
      }
    }
    if (block.kind == BlockKind::bubble && !block.special && block.inner &&
        block.singularities == std::vector<Id>{conic}) {
      int centers = 0, conics = 0;
      bool has_center = false;
      for (const auto& [sid, s] : block.inner->singularities) {
        (s.is_center() ? centers : conics)++;
        if (sid == center && s.is_center()) has_center = true;
      }
      bool nested = false;
      for (const auto& [ibid, inner_block] : block.inner->blocks)
        if (inner_block.inner) nested = true;
      if (has_center && centers == 1 && conics == 0 && !nested) {
        site.host = &root;
        site.block = bid;
        site.through_bubble = true;
        return site;
      }
    }
    if (block.inner) {
      site = locate_trivial_pair(*block.inner, center, conic);
      if (site.host) return site;
    }
  }
  return site;
}

}  // namespace

RewriteResult eliminate_trivial_pair(const Assembly& a, const Id& center, const Id& conic) {
  Assembly out = a.clone();
  TrivialPairSite site = locate_trivial_pair(out, center, conic);
  if (!site.host)
    return Error{ErrCode::not_a_trivial_pair,
                 "(" + center + ", " + conic + ") is not a trivial pair of singularities"};

  auto before = singularity_census(a);
  Assembly& host = *site.host;
  detach_singularity(host, conic);
  if (!site.through_bubble) detach_singularity(host, center);
  host.blocks.erase(site.block);  // interior (and its center) goes with the block

  RewriteStep step;
  step.op = "eliminate_trivial_pair";
  step.consumed = {site.block, center, conic};
  step.params["center"] = center;
  step.params["conic"] = conic;
  step.singularity_delta = census_delta(before, out);
  return Rewritten<>{std::move(out), std::move(step)};
}

// ---------------------------------------------------------------------------
// Bubble elimination
// ---------------------------------------------------------------------------

namespace {

// Remove a partnered bubble's engulfed region and cap the far side with a
// fresh center so the ambient sphere family closes up again.
void eliminate_engulfed_region(Assembly& host, Block& bubble, RewriteStep& step) {
  std::set<Id> killed(bubble.engulfs.begin(), bubble.engulfs.end());
  killed.insert(bubble.id);

  // singularities of killed blocks disappear with them
  for (const auto& bid : std::vector<Id>(killed.begin(), killed.end())) {
    auto it = host.blocks.find(bid);
    if (it == host.blocks.end()) continue;
    for (const auto& sid : std::vector<Id>(it->second.singularities))
      detach_singularity(host, sid);
  }

  // gluings: drop those inside the region, rewire dangling tangent ones
  Id cap_block = bubble.id + ":cap";
  auto endpoint_block = [&](const Gluing& glue, bool first) -> Id {
    const std::string& end = first ? glue.a : glue.b;
    if (glue.kind == GluingKind::tangent) return end.substr(0, end.find('.'));
    const Spot* spot = host.find_spot(end);
    return spot ? spot->owner : Id{};
  };
  std::vector<Id> rewire, drop;
  for (const auto& [gid, glue] : host.gluings) {
    bool ka = killed.count(endpoint_block(glue, true)) > 0;
    bool kb = killed.count(endpoint_block(glue, false)) > 0;
    if (ka && kb)
      drop.push_back(gid);
    else if (ka || kb) {
      if (glue.kind == GluingKind::tangent)
        rewire.push_back(gid);
      else
        drop.push_back(gid);  // stray annuli dissolve with the region
    }
  }
  for (const auto& gid : drop) {
    Gluing glue = host.gluings[gid];
    if (glue.kind != GluingKind::tangent) {
      for (const std::string& end : {glue.a, glue.b})
        if (host.spots.count(end) && !killed.count(host.spots[end].owner)) remove_spot(host, end);
    }
    host.gluings.erase(gid);
  }
  for (const auto& gid : rewire) {
    Gluing& glue = host.gluings[gid];
    if (killed.count(endpoint_block(glue, true))) glue.a = cap_block + ".bdry";
    if (killed.count(endpoint_block(glue, false))) glue.b = cap_block + ".bdry";
  }

  for (const auto& bid : killed) remove_block_cascade(host, bid);

  if (!rewire.empty()) {
    Block cap;
    cap.id = cap_block;
    cap.kind = BlockKind::center_ball;
    Singularity center;
    center.id = cap_block + "c";
    // index chosen so the ambient signed sum closes back to zero
    center.index = index_sum(host) > 0 ? 3 : 0;
    center.host_kind = HostKind::block;
    center.host = cap.id;
    cap.singularities = {center.id};
    host.blocks[cap.id] = cap;
    host.singularities[center.id] = center;
    step.produced.push_back(cap.id);
    step.produced.push_back(center.id);
  }
}

}  // namespace

RewriteResult eliminate_bubble(const Assembly& a, const Id& bubble) {
  Assembly out = a.clone();
  Assembly* host_ptr = assembly_with_block(out, bubble);
  if (!host_ptr) return Error{ErrCode::invalid_site, "no block " + bubble};
  Assembly& host = *host_ptr;
  Block block = host.blocks[bubble];
  if (block.kind != BlockKind::bubble)
    return Error{ErrCode::invalid_site,
                 bubble + " is a " + to_string(block.kind) +
                     (block.kind == BlockKind::trivial_bubble
                          ? "; eliminate it through its trivial pair"
                          : ", not a bubble")};

  auto before = singularity_census(a);
  RewriteStep step;
  step.op = "eliminate_bubble";
  step.consumed = {bubble};
  step.params["site"] = bubble;

  if (block.special) {
    // a special bubble dissolves with its two conic points; residual spots
    // and the caps behind them dissolve too
    for (const auto& pid : std::vector<Id>(block.spots)) consume_spot_pair(host, pid, true);
    remove_block_cascade(host, bubble);
  } else if (!block.partner.empty()) {
    eliminate_engulfed_region(host, host.blocks[bubble], step);
  } else {
    // fill the interior with concentric spheres around a fresh center,
    // then remove the resulting trivial pair
    RewriteStep fill;
    fill.op = "fill_with_center";
    fill.produced = {bubble + ":fillc"};
    RewriteStep pair;
    pair.op = "eliminate_trivial_pair";
    pair.consumed = {bubble, bubble + ":fillc"};
    if (!block.singularities.empty()) pair.consumed.push_back(block.singularities.front());
    step.sub_steps = {std::move(fill), std::move(pair)};
    remove_block_cascade(host, bubble);
  }

  step.singularity_delta = census_delta(before, out);
  return Rewritten<>{std::move(out), std::move(step)};
}

// ---------------------------------------------------------------------------
// Corrective movement and truncated bubble elimination
// ---------------------------------------------------------------------------

RewriteResult corrective_movement(const Assembly& a, const Id& tb) {
  Assembly out = a.clone();
  Assembly* host_ptr = assembly_with_block(out, tb);
  if (!host_ptr) return Error{ErrCode::invalid_site, "no block " + tb};
  Assembly& host = *host_ptr;
  Block block = host.blocks[tb];
  if (block.kind != BlockKind::truncated_bubble)
    return Error{ErrCode::invalid_site, tb + " is not a truncated_bubble"};

  Id w_in, w_out;
  for (const auto& pid : block.spots) {
    const Spot* p = host.find_spot(pid);
    if (!p) continue;
    if (p->direction == SpotDirection::inward && w_in.empty()) w_in = pid;
    if (p->direction == SpotDirection::outward && w_out.empty()) w_out = pid;
  }
  if (w_in.empty() || w_out.empty())
    return Error{ErrCode::invalid_site, tb + " lacks an inward/outward disc pair"};

  Id t_in = host.spots[w_in].associated_singularity;
  Id t_out = host.spots[w_out].associated_singularity;
  for (const Id& t : {t_in, t_out}) {
    const Singularity* s = host.find_singularity(t);
    if (!s) return Error{ErrCode::invalid_site, "associated conic point " + t + " missing"};
    if (s->host_kind != HostKind::block)
      return Error{ErrCode::invalid_site, "conic point " + t + " is pinned by a connected sum"};
  }

  auto before = singularity_census(a);

  // E1 and E2 fit into one sphere leaf carrying both conic points
  Id sb_id = tb + ":sb";
  Id leaf_id = tb + ":sphere";
  Block sb;
  sb.id = sb_id;
  sb.kind = BlockKind::bubble;
  sb.special = true;
  sb.host_leaf = block.host_leaf;
  sb.singularities = {t_in, t_out};

  LeafDescriptor sphere;
  sphere.id = leaf_id;
  sphere.owner = sb_id;
  sphere.shape = LeafShape::sphere;
  sphere.singularities = {t_in, t_out};

  for (const Id& t : {t_in, t_out}) {
    Singularity& s = host.singularities[t];
    auto old_host = host.blocks.find(s.host);
    if (old_host != host.blocks.end()) erase_from(old_host->second.singularities, t);
    for (auto& [lid, leaf] : host.leaves) erase_from(leaf.singularities, t);
    s.host = sb_id;
    s.leaf = leaf_id;
  }

  // designated discs merge into the sphere; the caps behind them dissolve
  erase_from(host.blocks[tb].spots, w_in);
  erase_from(host.blocks[tb].spots, w_out);
  consume_spot_pair(host, w_in, false);
  consume_spot_pair(host, w_out, false);

  // residual discs stay as transverse sites on the configuration
  Block& tb_now = host.blocks[tb];
  for (const auto& pid : tb_now.spots) {
    sb.spots.push_back(pid);
    host.spots[pid].owner = sb_id;
  }
  tb_now.spots.clear();
  for (auto lit = host.leaves.begin(); lit != host.leaves.end();)
    lit = lit->second.owner == tb && lit->second.singularities.empty() ? host.leaves.erase(lit)
                                                                       : std::next(lit);
  host.blocks.erase(tb);
  host.blocks[sb_id] = std::move(sb);
  host.leaves[leaf_id] = std::move(sphere);

  RewriteStep step;
  step.op = "corrective_movement";
  step.consumed = {tb, w_in, w_out};
  step.produced = {sb_id, leaf_id};
  step.params["site"] = tb;
  step.singularity_delta = census_delta(before, out);
  return Rewritten<>{std::move(out), std::move(step)};
}

RewriteResult eliminate_truncated_bubble(const Assembly& a, const Id& tb) {
  auto moved = corrective_movement(a, tb);
  if (!moved.ok()) return moved.error();

  // the small modifications make each leaf carry one conic point: the
  // mutually nested sphere pair appears, then dissolves as bubbles do
  auto split = split_singular_leaf(moved.value().assembly, tb + ":sphere");
  if (!split.ok()) return split.error();
  auto gone = eliminate_bubble(split.value().assembly, tb + ":sb");
  if (!gone.ok()) return gone.error();

  auto before = singularity_census(a);
  RewriteStep step;
  step.op = "eliminate_truncated_bubble";
  step.consumed = {tb};
  step.params["site"] = tb;
  step.sub_steps = {moved.value().step, split.value().step, gone.value().step};
  step.singularity_delta = census_delta(before, gone.value().assembly);
  return Rewritten<>{std::move(gone.value().assembly), std::move(step)};
}

// ---------------------------------------------------------------------------
// Completing truncated components
// ---------------------------------------------------------------------------

RewriteResult complete_truncated_component(const Assembly& a, const Id& component) {
  Assembly out = a.clone();
  Assembly* host_ptr = assembly_with_block(out, component);
  if (!host_ptr) return Error{ErrCode::invalid_site, "no block " + component};
  Assembly& host = *host_ptr;
  Block& block = host.blocks[component];
  if (block.kind != BlockKind::truncated_reeb && block.kind != BlockKind::truncated_morse)
    return Error{ErrCode::invalid_site, component + " is not a truncated component"};
  if (block.spots.size() != 1)
    return Error{ErrCode::cannot_complete, component + " has no single spot to resolve"};

  Id spot = block.spots.front();
  const Gluing* glue = gluing_of_spot(host, spot);
  if (!glue)
    return Error{ErrCode::cannot_complete, "spot " + spot + " is unresolved"};
  if (glue->kind != GluingKind::spot_transverse)
    return Error{ErrCode::cannot_complete, "spot " + spot + " is consumed by a connected sum"};
  Id partner = glue->a == spot ? glue->b : glue->a;
  const Spot* q = host.find_spot(partner);
  const Block* cap = q ? host.find_block(q->owner) : nullptr;
  if (!cap || cap->kind != BlockKind::ball_with_spots || cap->spots.size() != 1 ||
      !cap->singularities.empty())
    return Error{ErrCode::cannot_complete, "spot " + spot + " is not capped by a trivially foliated ball"};

  Id cap_id = cap->id;
  host.gluings.erase(glue->id);
  remove_spot(host, spot);
  remove_spot(host, partner);
  remove_block_cascade(host, cap_id);
  block.spots.clear();
  block.kind = block.kind == BlockKind::truncated_reeb ? BlockKind::reeb_solid_torus
                                                       : BlockKind::morse_solid_torus;

  RewriteStep step;
  step.op = "complete_truncated_component";
  step.consumed = {component, spot, partner, cap_id};
  step.produced = {component};
  step.params["site"] = component;
  return Rewritten<>{std::move(out), std::move(step)};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

// first leaf (by id, outermost last) carrying two or more conic points
Id find_multi_conic_leaf(const Assembly& a) {
  for (const auto& [bid, block] : a.blocks)
    if (block.inner) {
      Id found = find_multi_conic_leaf(*block.inner);
      if (!found.empty()) return found;
    }
  for (const auto& [lid, leaf] : a.leaves) {
    int conics = 0;
    for (const auto& sid : leaf.singularities) {
      const Singularity* s = a.find_singularity(sid);
      if (s && s->is_conic()) conics++;
    }
    if (conics >= 2) return lid;
  }
  return {};
}

std::vector<Id> order_by_policy(std::vector<Id> sites, const NormalizeOptions& options) {
  if (options.policy != OrderPolicy::explicit_order) return sites;
  std::vector<Id> ordered;
  for (const auto& want : options.explicit_sequence) {
    auto it = std::find(sites.begin(), sites.end(), want);
    if (it != sites.end()) {
      ordered.push_back(want);
      sites.erase(it);
    }
  }
  ordered.insert(ordered.end(), sites.begin(), sites.end());
  return ordered;
}

}  // namespace

Result<Normalized> normalize(const Assembly& a, const NormalizeOptions& options) {
  if (a.ambient.s3 && !is_closed(a))
    return Error{ErrCode::not_closed, "normalization requires a closed assembly"};

  Normalized run{a.clone(), {}};
  auto initial = singularity_census(run.assembly);
  int budget = 4;  // rounds with no elimination allowed before we stop
  for (const auto& [idx, n] : initial) budget += n;

  for (int round = 0; round < budget; ++round) {
    bool changed = false;

    for (Id leaf = find_multi_conic_leaf(run.assembly); !leaf.empty();
         leaf = find_multi_conic_leaf(run.assembly)) {
      auto split = split_singular_leaf(run.assembly, leaf);
      if (!split.ok()) break;
      run.assembly = std::move(split.value().assembly);
      run.steps.push_back(std::move(split.value().step));
      changed = true;
    }

    for (auto pairs = find_trivial_pairs(run.assembly); !pairs.empty();
         pairs = find_trivial_pairs(run.assembly)) {
      auto gone = eliminate_trivial_pair(run.assembly, pairs.front().first, pairs.front().second);
      if (!gone.ok()) return gone.error();
      run.assembly = std::move(gone.value().assembly);
      run.steps.push_back(std::move(gone.value().step));
      changed = true;
    }

    std::vector<Id> bubbles = order_by_policy(find_bubbles(run.assembly), options);
    if (!bubbles.empty()) {
      auto gone = eliminate_bubble(run.assembly, bubbles.front());
      if (!gone.ok()) return gone.error();
      run.assembly = std::move(gone.value().assembly);
      run.steps.push_back(std::move(gone.value().step));
      continue;  // rescan: partnered eliminations may remove other sites
    }

    std::vector<Id> tbs = order_by_policy(find_truncated_bubbles(run.assembly), options);
    if (!tbs.empty()) {
      auto gone = eliminate_truncated_bubble(run.assembly, tbs.front());
      if (!gone.ok()) return gone.error();
      run.assembly = std::move(gone.value().assembly);
      run.steps.push_back(std::move(gone.value().step));
      continue;
    }

    if (!changed) break;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

RewriteResult apply_step(const Assembly& a, const RewriteStep& step) {
  auto param = [&](const std::string& key) -> std::string {
    auto it = step.params.find(key);
    return it == step.params.end() ? std::string{} : it->second;
  };
  if (step.op == "morse_mod_a") return morse_mod_a(a, param("site"), std::stod(param("level")));
  if (step.op == "morse_mod_b") return morse_mod_b(a, param("site"), std::stod(param("level")));
  if (step.op == "split_singular_leaf") return split_singular_leaf(a, param("site"));
  if (step.op == "eliminate_trivial_pair")
    return eliminate_trivial_pair(a, param("center"), param("conic"));
  if (step.op == "eliminate_bubble") return eliminate_bubble(a, param("site"));
  if (step.op == "corrective_movement") return corrective_movement(a, param("site"));
  if (step.op == "eliminate_truncated_bubble")
    return eliminate_truncated_bubble(a, param("site"));
  if (step.op == "complete_truncated_component")
    return complete_truncated_component(a, param("site"));
  if (step.op == "expand_ball" || step.op == "merge_balls") {
    auto merged = apply_ball_merge(a, param("ball"), param("along"));
    if (!merged.ok()) return merged.error();
    RewriteStep replayed = step;
    return Rewritten<>{merged.take(), std::move(replayed)};
  }
  return Error{ErrCode::invalid_spec, "cannot replay step " + step.op};
}

}  // namespace morsefol

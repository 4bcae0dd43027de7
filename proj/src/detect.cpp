#include "morsefol/detect.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace morsefol {

std::string to_string(Component::Kind k) {
  switch (k) {
    case Component::Kind::reeb: return "reeb";
    case Component::Kind::truncated_reeb: return "truncated_reeb";
    case Component::Kind::morse: return "morse";
    case Component::Kind::truncated_morse: return "truncated_morse";
  }
  return "?";
}

namespace {

// Walk the assembly and every bubble interior, deepest first.
void walk_assemblies(const Assembly& a, int depth,
                     const std::function<void(const Assembly&, int)>& visit) {
  for (const auto& [bid, block] : a.blocks)
    if (block.inner) walk_assemblies(*block.inner, depth + 1, visit);
  visit(a, depth);
}

bool bubble_is_trivialized(const Block& block) {
  if (block.kind != BlockKind::bubble || block.special || !block.inner) return false;
  int centers = 0, conics = 0;
  for (const auto& [sid, s] : block.inner->singularities) (s.is_center() ? centers : conics)++;
  for (const auto& [bid, b] : block.inner->blocks)
    if (b.inner) return false;  // nested content keeps it non-trivial
  return centers == 1 && conics == 0;
}

const Gluing* gluing_of_spot(const Assembly& a, const Id& spot) {
  for (const auto& [gid, glue] : a.gluings) {
    if (glue.kind == GluingKind::tangent) continue;
    if (glue.a == spot || glue.b == spot) return &glue;
  }
  return nullptr;
}

Id other_spot(const Gluing& glue, const Id& spot) { return glue.a == spot ? glue.b : glue.a; }

bool block_is_summed(const Assembly& a, const Block& block) {
  for (const auto& pid : block.spots) {
    const Gluing* glue = gluing_of_spot(a, pid);
    if (glue && glue->kind == GluingKind::connected_sum) return true;
  }
  return false;
}

bool block_carries_attached_bubble(const Assembly& a, const Id& block_id) {
  for (const auto& [bid, b] : a.blocks) {
    if (b.kind != BlockKind::trivial_bubble && b.kind != BlockKind::bubble) continue;
    const LeafDescriptor* host = a.find_leaf(b.host_leaf);
    if (host && host->owner == block_id) return true;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trivial pairs / bubbles / truncated bubbles
// ---------------------------------------------------------------------------

std::vector<std::pair<Id, Id>> find_trivial_pairs(const Assembly& a) {
  std::vector<std::pair<Id, Id>> out;
  walk_assemblies(a, 0, [&](const Assembly& asmb, int) {
    for (const auto& [bid, block] : asmb.blocks) {
      if (block.kind == BlockKind::trivial_bubble) {
        Id center, conic;
        for (const auto& sid : block.singularities) {
          const Singularity* s = asmb.find_singularity(sid);
          if (!s) continue;
          (s->is_center() ? center : conic) = sid;
        }
        if (!center.empty() && !conic.empty()) out.emplace_back(center, conic);
      } else if (bubble_is_trivialized(block)) {
        Id center;
        for (const auto& [sid, s] : block.inner->singularities)
          if (s.is_center()) center = sid;
        Id conic = block.singularities.empty() ? Id{} : block.singularities.front();
        if (!center.empty() && !conic.empty()) out.emplace_back(center, conic);
      }
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Id> find_bubbles(const Assembly& a) {
  // walk_assemblies visits interiors first, giving innermost-first order
  std::vector<Id> out;
  walk_assemblies(a, 0, [&](const Assembly& asmb, int) {
    std::vector<Id> here;
    for (const auto& [bid, block] : asmb.blocks)
      if (block.kind == BlockKind::bubble && !bubble_is_trivialized(block)) here.push_back(bid);
    std::sort(here.begin(), here.end());
    out.insert(out.end(), here.begin(), here.end());
  });
  return out;
}

std::vector<Id> find_truncated_bubbles(const Assembly& a) {
  std::vector<Id> out;
  walk_assemblies(a, 0, [&](const Assembly& asmb, int) {
    for (const auto& [bid, block] : asmb.blocks) {
      if (block.kind != BlockKind::truncated_bubble) continue;
      // re-verify: distinct associated conic points, both directions,
      // tangent boundary free of conic points
      std::set<Id> assoc;
      bool ok = true, has_in = false, has_out = false;
      for (const auto& pid : block.spots) {
        const Spot* p = asmb.find_spot(pid);
        if (!p || p->associated_singularity.empty() || !assoc.insert(p->associated_singularity).second) {
          ok = false;
          break;
        }
        (p->direction == SpotDirection::inward ? has_in : has_out) = true;
      }
      const LeafDescriptor* host = asmb.find_leaf(block.host_leaf);
      if (host && !host->singularities.empty()) ok = false;
      if (ok && has_in && has_out) out.push_back(bid);
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Cycle witnesses
// ---------------------------------------------------------------------------

namespace {

Id boundary_leaf_of(const Assembly& a, const Id& block_id) {
  BoundaryComponents bc = boundary_components(a);
  auto it = bc.component_of.find(block_id + ".bdry");
  if (it != bc.component_of.end()) {
    auto git = bc.tangent_gluings.find(it->second);
    if (git != bc.tangent_gluings.end() && !git->second.empty()) return "glue:" + git->second.front();
  }
  return block_id + ":planes";
}

}  // namespace

std::vector<CycleWitness> find_vanishing_cycles(const Assembly& a) {
  std::vector<CycleWitness> out;
  walk_assemblies(a, 0, [&](const Assembly& asmb, int) {
    for (const auto& [bid, block] : asmb.blocks) {
      if (block.kind != BlockKind::reeb_solid_torus) continue;
      CycleWitness w;
      w.kind = CycleWitness::Kind::vanishing;
      w.base_leaf = boundary_leaf_of(asmb, bid);
      w.transition_parameter = 0.0;
      w.segment_flags = {{w.base_leaf, false}, {bid + ":planes", true}};
      out.push_back(std::move(w));
    }
  });
  return out;
}

Result<std::vector<CycleWitness>> find_anti_vanishing_cycles(const Assembly& a) {
  for (const auto& [lid, leaf] : a.leaves) {
    int conics = 0;
    for (const auto& sid : leaf.singularities) {
      const Singularity* s = a.find_singularity(sid);
      if (s && s->is_conic()) conics++;
    }
    if (conics > 1)
      return Error{ErrCode::multi_singular_leaf,
                   "leaf " + lid + " carries several conic points; split it first"};
  }

  std::vector<CycleWitness> out;
  for (const auto& [bid, block] : a.blocks) {
    if (block.kind != BlockKind::ball_with_spots) continue;
    for (const auto& pid : block.spots) {
      const Spot* p = a.find_spot(pid);
      if (!p || p->associated_singularity.empty()) continue;
      CycleWitness w;
      w.kind = CycleWitness::Kind::anti_vanishing;
      w.base_leaf = block.host_leaf;
      w.transition_parameter = 0.5;
      w.segment_flags = {{bid + ":discs", true}, {block.host_leaf, false}};
      w.determined_singularity = p->associated_singularity;
      out.push_back(std::move(w));
    }
  }
  for (const auto& [lid, leaf] : a.leaves) {
    if (leaf.shape != LeafShape::pseudo_disc) continue;
    CycleWitness w;
    w.kind = CycleWitness::Kind::anti_vanishing;
    w.base_leaf = lid;
    w.transition_parameter = 0.5;
    w.segment_flags = {{lid, true}, {lid, false}};
    if (!leaf.singularities.empty()) w.determined_singularity = leaf.singularities.front();
    w.implies_truncated_morse = true;
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spot classification and expansion
// ---------------------------------------------------------------------------

Result<std::vector<SpotClassification>> classify_spots(const Assembly& a, const Id& ball) {
  const Block* block = a.find_block(ball);
  if (!block || block->kind != BlockKind::ball_with_spots)
    return Error{ErrCode::invalid_site, ball + " is not a ball_with_spots"};

  std::vector<SpotClassification> out;
  for (const auto& pid : block->spots) {
    SpotClassification c;
    c.spot = pid;
    const Gluing* glue = gluing_of_spot(a, pid);
    if (glue && glue->kind == GluingKind::spot_transverse) {
      Id partner = other_spot(*glue, pid);
      const Spot* q = a.find_spot(partner);
      if (q && q->owner == ball) {
        // annulus joining two spots of the same ball
        c.captured = true;
        c.capture_partner = partner;
      } else if (q) {
        const Block* neighbor = a.find_block(q->owner);
        c.essential = neighbor && neighbor->kind == BlockKind::ball_with_spots &&
                      neighbor->spots.size() == 3;
      }
    }
    if (!c.captured && !c.essential.has_value()) c.essential = false;
    out.push_back(std::move(c));
  }
  return out;
}

ExpansionState expansion_state_of(const Assembly& a, const Id& ball) {
  ExpansionState state;
  state.ball = ball;
  auto classes = classify_spots(a, ball);
  if (classes.ok()) state.spots = classes.take();
  for (const auto& c : state.spots) (c.captured ? state.captured_count : state.free_count)++;
  if (const Block* block = a.find_block(ball)) {
    for (const auto& pid : block->spots) {
      const Spot* p = a.find_spot(pid);
      if (p && !p->associated_singularity.empty()) state.conic_ids.insert(p->associated_singularity);
    }
  }
  return state;
}

Result<Assembly> apply_ball_merge(const Assembly& a, const Id& ball, const Id& along) {
  const Block* block = a.find_block(ball);
  if (!block || block->kind != BlockKind::ball_with_spots)
    return Error{ErrCode::invalid_site, ball + " is not a ball_with_spots"};
  if (!block->owns_spot(along))
    return Error{ErrCode::invalid_site, along + " is not a spot of " + ball};
  const Gluing* glue = gluing_of_spot(a, along);
  if (!glue || glue->kind != GluingKind::spot_transverse)
    return Error{ErrCode::cannot_expand, "spot " + along + " has no annulus continuation"};
  const Spot* partner_spot = a.find_spot(other_spot(*glue, along));
  if (!partner_spot || partner_spot->owner == ball)
    return Error{ErrCode::cannot_expand, "spot " + along + " does not lead to another ball"};
  const Block* other = a.find_block(partner_spot->owner);
  if (!other || other->kind != BlockKind::ball_with_spots)
    return Error{ErrCode::cannot_expand, "spot " + along + " does not lead to another ball"};

  Assembly out = a.clone();
  Block& dst = out.blocks[ball];
  Block& src = out.blocks[other->id];
  Id partner_id = partner_spot->id;

  dst.spots.erase(std::remove(dst.spots.begin(), dst.spots.end(), along), dst.spots.end());
  out.spots.erase(along);
  for (const auto& pid : src.spots) {
    if (pid == partner_id) continue;
    dst.spots.push_back(pid);
    out.spots[pid].owner = ball;
  }
  out.spots.erase(partner_id);
  for (const auto& sid : src.singularities) {
    dst.singularities.push_back(sid);
    out.singularities[sid].host = ball;
  }
  out.gluings.erase(glue->id);
  // the absorbed ball's declared leaf families dissolve into the merged ball
  for (auto it = out.leaves.begin(); it != out.leaves.end();) {
    if (it->second.owner == src.id && it->second.singularities.empty())
      it = out.leaves.erase(it);
    else
      ++it;
  }
  for (auto& [lid, leaf] : out.leaves)
    if (leaf.owner == src.id) leaf.owner = ball;
  for (auto& [bid, b] : out.blocks) {
    if (b.host_leaf.empty()) continue;
    const LeafDescriptor* host = out.find_leaf(b.host_leaf);
    if (!host) b.host_leaf = dst.host_leaf;
  }
  out.blocks.erase(src.id);
  return out;
}

Result<Expanded> expand_ball(const Assembly& a, const ExpansionState& state, const Id& along) {
  auto it = std::find_if(state.spots.begin(), state.spots.end(),
                         [&](const SpotClassification& c) { return c.spot == along; });
  if (it == state.spots.end())
    return Error{ErrCode::cannot_expand, along + " is not a spot of " + state.ball};
  if (it->captured || !it->essential.value_or(false))
    return Error{ErrCode::cannot_expand, "spot " + along + " is not an essential free spot"};

  auto merged = apply_ball_merge(a, state.ball, along);
  if (!merged.ok()) return merged.error();

  Expanded out{merged.take(), {}};
  out.state = expansion_state_of(out.assembly, state.ball);
  out.state.merged_blocks = state.merged_blocks;
  return out;
}

Result<ExpansionRun> completely_expand(const Assembly& a) {
  if (!find_trivial_pairs(a).empty() || !find_bubbles(a).empty() ||
      !find_truncated_bubbles(a).empty())
    return Error{ErrCode::not_normalized, "assembly still has trivial pairs or bubbles"};

  ExpansionRun run{a.clone(), {}, {}};
  bool changed = true;
  while (changed) {
    changed = false;
    // pants expansions along essential free spots, lowest ball/spot first
    for (const auto& [bid, block] : run.assembly.blocks) {
      if (block.kind != BlockKind::ball_with_spots) continue;
      ExpansionState state = expansion_state_of(run.assembly, bid);
      for (const auto& c : state.spots) {
        if (c.captured || !c.essential.value_or(false)) continue;
        auto expanded = expand_ball(run.assembly, state, c.spot);
        if (expanded.ok()) {
          run.actions.push_back({true, bid, c.spot});
          run.assembly = std::move(expanded.value().assembly);
          changed = true;
          break;
        }
      }
      if (changed) break;
    }
    if (changed) continue;
    // plain additions of two balls through an annulus-joined spot pair
    for (const auto& [bid, block] : run.assembly.blocks) {
      if (block.kind != BlockKind::ball_with_spots) continue;
      for (const auto& pid : block.spots) {
        const Gluing* glue = gluing_of_spot(run.assembly, pid);
        if (!glue || glue->kind != GluingKind::spot_transverse) continue;
        const Spot* q = run.assembly.find_spot(other_spot(*glue, pid));
        if (!q || q->owner == bid) continue;
        const Block* neighbor = run.assembly.find_block(q->owner);
        if (!neighbor || neighbor->kind != BlockKind::ball_with_spots) continue;
        auto merged = apply_ball_merge(run.assembly, bid, pid);
        if (merged.ok()) {
          run.actions.push_back({false, bid, pid});
          run.assembly = merged.take();
          changed = true;
          break;
        }
      }
      if (changed) break;
    }
  }

  std::set<Id> covered;
  for (const auto& [bid, block] : run.assembly.blocks) {
    if (block.kind != BlockKind::ball_with_spots) continue;
    ExpansionState state = expansion_state_of(run.assembly, bid);
    covered.insert(state.conic_ids.begin(), state.conic_ids.end());
    run.family.push_back(std::move(state));
  }
  // conic points away from every ball get the implicit ball around their
  // trivial neighborhood; it admits no pants and is already expanded
  for (const auto& [sid, s] : run.assembly.singularities) {
    if (!s.is_conic() || covered.count(sid)) continue;
    ExpansionState state;
    state.ball = "around:" + sid;
    state.conic_ids.insert(sid);
    for (const char* side : {"#in", "#out"}) {
      SpotClassification c;
      c.spot = sid + std::string(side);
      c.essential = false;
      state.spots.push_back(std::move(c));
      state.free_count++;
    }
    run.family.push_back(std::move(state));
  }
  std::sort(run.family.begin(), run.family.end(),
            [](const ExpansionState& x, const ExpansionState& y) { return x.ball < y.ball; });
  return run;
}

// ---------------------------------------------------------------------------
// Component location
// ---------------------------------------------------------------------------

std::vector<Component> find_components(const Assembly& a) {
  std::vector<Component> out;
  walk_assemblies(a, 0, [&](const Assembly& asmb, int) {
    for (const auto& [bid, block] : asmb.blocks) {
      switch (block.kind) {
        case BlockKind::reeb_solid_torus: {
          Component c;
          c.kind = block_is_summed(asmb, block) ? Component::Kind::truncated_reeb
                                                : Component::Kind::reeb;
          c.singular = block_carries_attached_bubble(asmb, bid);
          c.blocks = {bid};
          out.push_back(std::move(c));
          break;
        }
        case BlockKind::morse_solid_torus: {
          Component c;
          c.kind = block_is_summed(asmb, block) ? Component::Kind::truncated_morse
                                                : Component::Kind::morse;
          c.singular = block_carries_attached_bubble(asmb, bid);
          c.blocks = {bid};
          out.push_back(std::move(c));
          break;
        }
        case BlockKind::truncated_reeb:
        case BlockKind::truncated_morse: {
          Component c;
          c.kind = block.kind == BlockKind::truncated_reeb ? Component::Kind::truncated_reeb
                                                           : Component::Kind::truncated_morse;
          c.singular = block_carries_attached_bubble(asmb, bid);
          c.blocks = {bid};
          out.push_back(std::move(c));
          break;
        }
        case BlockKind::ball_with_spots: {
          // two spots captured between them: Reeb material minus a ball
          auto classes = classify_spots(asmb, bid);
          if (!classes.ok()) break;
          for (const auto& cls : classes.value()) {
            if (!cls.captured || cls.capture_partner < cls.spot) continue;
            Component c;
            c.kind = Component::Kind::truncated_reeb;
            c.blocks = {bid};
            if (const Gluing* glue = gluing_of_spot(asmb, cls.spot)) c.gluings = {glue->id};
            out.push_back(std::move(c));
          }
          break;
        }
        default:
          break;
      }
    }
    // pattern-located components: pseudo-torus and pseudo-disc leaves
    for (const auto& [lid, leaf] : asmb.leaves) {
      if (leaf.shape == LeafShape::pseudo_torus) {
        const Block* owner = asmb.find_block(leaf.owner);
        if (owner && (owner->kind == BlockKind::morse_solid_torus ||
                      owner->kind == BlockKind::truncated_morse))
          continue;  // already reported through the block
        Component c;
        c.kind = Component::Kind::morse;
        c.pseudo = true;
        if (owner) c.blocks = {leaf.owner};
        c.leaf = lid;
        out.push_back(std::move(c));
      } else if (leaf.shape == LeafShape::pseudo_disc) {
        Component c;
        c.kind = Component::Kind::truncated_morse;
        c.pseudo = true;
        if (asmb.find_block(leaf.owner)) c.blocks = {leaf.owner};
        c.leaf = lid;
        out.push_back(std::move(c));
      }
    }
  });
  std::sort(out.begin(), out.end(), [](const Component& x, const Component& y) {
    if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
    return x.blocks < y.blocks;
  });
  return out;
}

}  // namespace morsefol

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metapipe/expr.hpp"
#include "metapipe/graph.hpp"

namespace metapipe {

// Candidate relations for one vertex. The cross-vertex pseudo-set (vertex ==
// kCrossVertex) holds relations that join every composite as final conjuncts.
struct RelationSet {
  std::string vertex;
  std::vector<RelationExpr> relations;
};

struct SelectionSet {
  std::map<std::string, RelationExpr> chosen;  // vertex -> relation
};

struct ProvenanceEntry {
  int step = 0;
  std::string note;
};

struct CompositeCandidate {
  RelationExpr expr;
  DomainSet domain;
  std::vector<ProvenanceEntry> provenance;
};

enum class BranchMode { Joint, PerBranch };

inline std::string to_string(BranchMode m) {
  return m == BranchMode::Joint ? "joint" : "per-branch";
}

// Stand-in for the human judgment in the algorithm: which operators to try,
// how far to extend per-vertex sets, and how large candidate lists may grow.
struct CombinationPolicy {
  std::vector<BoolOp> extension_ops{BoolOp::And, BoolOp::Or, BoolOp::HatAnd, BoolOp::HatOr};
  int extension_rounds = 1;
  std::size_t set_cap = 32;
  std::vector<BoolOp> fanout_ops{BoolOp::And, BoolOp::Or, BoolOp::HatAnd, BoolOp::HatOr};
  std::vector<BoolOp> branch_ops{BoolOp::And, BoolOp::Or,     BoolOp::Xor,
                                 BoolOp::HatAnd, BoolOp::HatOr, BoolOp::HatXor};
  BranchMode branch_mode = BranchMode::Joint;
  std::size_t fanout_cap = 64;
  std::size_t candidate_cap = 256;
  std::function<bool(const RelationExpr&)> accept;  // optional extra filter
};

// ---------------------------------------------------------------------------
// Step 1: extend a per-vertex relation set by pairwise combination. Combined
// relations with empty domains are never added; originals are kept.

inline RelationSet extend_set(const RelationSet& set, const CombinationPolicy& policy,
                              const DomainSet& universe, const AtomRegistry& atoms) {
  if (set.relations.empty()) throw UsageError("extend_set: empty relation set");
  std::vector<RelationExpr> out = set.relations;
  std::set<std::string> seen;
  for (const auto& r : out) seen.insert(canonical_text(r));

  for (int round = 0; round < policy.extension_rounds; ++round) {
    const std::size_t base = out.size();
    bool grew = false;
    for (std::size_t i = 0; i < base && out.size() < policy.set_cap; ++i) {
      for (std::size_t j = i + 1; j < base && out.size() < policy.set_cap; ++j) {
        for (BoolOp op : policy.extension_ops) {
          if (out.size() >= policy.set_cap) break;
          RelationExpr combined = RelationExpr::combine(op, out[i], out[j]);
          if (domain_of(combined, universe, atoms).empty()) continue;
          if (policy.accept && !policy.accept(combined)) continue;
          if (!seen.insert(canonical_text(combined)).second) continue;
          out.push_back(combined);
          grew = true;
        }
      }
    }
    if (!grew) break;
  }
  return RelationSet{set.vertex, std::move(out)};
}

// ---------------------------------------------------------------------------
// Step 2: a relation that can be undefined during execution either becomes
// DEF(R) (conditions unknown), or is split into a restricted R' plus INDEF
// over the known-undefined classes.

struct SplitResult {
  std::vector<RelationExpr> parts;
  std::vector<RelationAtom> derived_atoms;  // must be registered by the caller
};

inline SplitResult split_partial(const RelationAtom& atom, const DomainSet& known_undef) {
  SplitResult result;
  if (known_undef.empty()) {
    result.parts.push_back(RelationExpr::def(RelationExpr::atom(atom.id)));
    return result;
  }
  if (!known_undef.subset_of(atom.domain)) {
    throw UsageError("split_partial: known-undefined classes " + known_undef.to_string() +
                     " are not a subset of dom(" + atom.id + ") = " + atom.domain.to_string());
  }
  DomainSet rest = atom.domain.difference(known_undef);
  if (!rest.empty()) {
    RelationAtom restricted = atom;
    restricted.id = atom.id + "'";
    restricted.domain = rest;
    restricted.not_computed_classes = DomainSet{};
    result.parts.push_back(RelationExpr::atom(restricted.id));
    result.derived_atoms.push_back(std::move(restricted));
  }
  if (rest.empty()) {
    // Nothing remains defined; only the INDEF side survives.
    result.parts.push_back(RelationExpr::indef(RelationExpr::atom(atom.id)));
  } else {
    RelationAtom undef_part = atom;
    undef_part.id = atom.id + "''";
    undef_part.domain = known_undef;
    undef_part.not_computed_classes = DomainSet{};
    result.parts.push_back(RelationExpr::indef(RelationExpr::atom(undef_part.id)));
    result.derived_atoms.push_back(std::move(undef_part));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Step 3: deterministic enumeration of one-relation-per-vertex selections,
// lexicographic in vertex id and relation index.

struct SelectionEnumeration {
  std::vector<SelectionSet> selections;
  std::size_t total = 0;
};

inline SelectionEnumeration enumerate_selections(const std::vector<RelationSet>& sets,
                                                 std::size_t cap) {
  if (cap < 1) throw UsageError("enumerate_selections: cap must be >= 1");
  std::vector<const RelationSet*> ordered;
  for (const auto& s : sets) {
    if (s.vertex == kCrossVertex) continue;
    if (s.relations.empty()) {
      throw UsageError("relation set for vertex '" + s.vertex + "' is empty");
    }
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const RelationSet* a, const RelationSet* b) { return a->vertex < b->vertex; });

  SelectionEnumeration out;
  out.total = 1;
  for (const auto* s : ordered) {
    out.total *= s->relations.size();
  }
  if (ordered.empty()) {
    out.selections.push_back(SelectionSet{});
    return out;
  }

  std::vector<std::size_t> idx(ordered.size(), 0);
  while (out.selections.size() < cap) {
    SelectionSet sel;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      sel.chosen[ordered[i]->vertex] = ordered[i]->relations[idx[i]];
    }
    out.selections.push_back(std::move(sel));
    // odometer increment, last vertex fastest
    std::size_t i = ordered.size();
    while (i > 0) {
      --i;
      if (++idx[i] < ordered[i]->relations.size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step 4: every vertex downstream of a DEF/INDEF-affected vertex gets its
// chosen relation wrapped in DEF. Idempotent; never removes a wrap.

inline SelectionSet propagate_def(const SelectionSet& selection, const PipelineGraph& graph) {
  std::set<std::string> wrapped_sources;
  for (const auto& [v, expr] : selection.chosen) {
    if (contains_def_or_indef(expr)) wrapped_sources.insert(v);
  }
  std::set<std::string> affected = graph.downstream_of(wrapped_sources);
  SelectionSet out = selection;
  for (const auto& v : affected) {
    auto it = out.chosen.find(v);
    if (it == out.chosen.end()) continue;
    if (it->second.kind() == ExprKind::Def) continue;
    it->second = RelationExpr::def(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fan-out combination (step 5) and branch handling (step 6).

namespace detail {

inline void fanout_trees_rec(const std::vector<RelationExpr>& items,
                             const std::vector<BoolOp>& ops,
                             std::vector<RelationExpr>& out) {
  if (items.size() == 1) {
    out.push_back(items[0]);
    return;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      for (BoolOp op : ops) {
        std::vector<RelationExpr> next;
        next.reserve(items.size() - 1);
        for (std::size_t k = 0; k < items.size(); ++k) {
          if (k != i && k != j) next.push_back(items[k]);
        }
        next.push_back(RelationExpr::combine(op, items[i], items[j]));
        fanout_trees_rec(next, ops, out);
      }
    }
  }
}

}  // namespace detail

// All combination trees over the relations of vertices sharing one producer.
// Same-operator folds come first (the shapes named in worked derivations),
// then mixed trees for small consumer counts. Empty-domain results dropped.
inline std::vector<RelationExpr> fanout_combinations(const std::vector<RelationExpr>& relations,
                                                     const CombinationPolicy& policy,
                                                     const DomainSet& universe,
                                                     const AtomRegistry& atoms) {
  if (relations.empty()) throw UsageError("fanout_combinations: no relations");
  if (relations.size() == 1) return {relations[0]};

  std::vector<RelationExpr> out;
  std::set<std::string> seen;
  auto push = [&](const RelationExpr& e) {
    if (out.size() >= policy.fanout_cap) return;
    if (domain_of(e, universe, atoms).empty()) return;
    if (policy.accept && !policy.accept(e)) return;
    if (!seen.insert(canonical_text(e)).second) return;
    out.push_back(e);
  };

  for (BoolOp op : policy.fanout_ops) {
    RelationExpr acc = relations[0];
    for (std::size_t i = 1; i < relations.size(); ++i) {
      acc = RelationExpr::combine(op, acc, relations[i]);
    }
    push(acc);
  }
  if (relations.size() <= 3) {
    std::vector<RelationExpr> mixed;
    detail::fanout_trees_rec(relations, policy.fanout_ops, mixed);
    for (const auto& e : mixed) push(e);
  }
  return out;
}

// Step 6. JOINT combines the branch members' relations into one term before
// composition. PER_BRANCH takes per-branch suffix composites (already built
// under each branch's execution view) and joins them pairwise.
inline std::vector<RelationExpr> handle_branches(
    const std::vector<std::pair<std::string, RelationExpr>>& member_relations,
    BranchMode mode, const CombinationPolicy& policy, const DomainSet& universe,
    const AtomRegistry& atoms,
    const std::map<std::string, std::vector<RelationExpr>>& per_branch_suffixes = {}) {
  if (member_relations.empty()) throw UsageError("handle_branches: empty branch group");

  std::vector<RelationExpr> out;
  std::set<std::string> seen;
  auto push = [&](const RelationExpr& e) {
    if (domain_of(e, universe, atoms).empty()) return;
    if (!seen.insert(canonical_text(e)).second) return;
    out.push_back(e);
  };

  if (member_relations.size() == 1) {
    if (mode == BranchMode::Joint) return {member_relations[0].second};
    auto it = per_branch_suffixes.find(member_relations[0].first);
    if (it == per_branch_suffixes.end() || it->second.empty()) {
      return {member_relations[0].second};
    }
    for (const auto& suffix : it->second) {
      push(RelationExpr::and_(member_relations[0].second, suffix));
    }
    return out;
  }

  if (mode == BranchMode::Joint) {
    for (BoolOp op : policy.branch_ops) {
      RelationExpr acc = member_relations[0].second;
      for (std::size_t i = 1; i < member_relations.size(); ++i) {
        acc = RelationExpr::combine(op, acc, member_relations[i].second);
      }
      push(acc);
    }
    return out;
  }

  // PER_BRANCH: each member contributes R_member ∩ suffix variants; variants
  // of consecutive members are then joined with every operator in the menu.
  std::vector<std::vector<RelationExpr>> branch_variants;
  for (const auto& [member, rel] : member_relations) {
    std::vector<RelationExpr> variants;
    auto it = per_branch_suffixes.find(member);
    if (it == per_branch_suffixes.end() || it->second.empty()) {
      variants.push_back(rel);
    } else {
      for (const auto& suffix : it->second) {
        variants.push_back(RelationExpr::and_(rel, suffix));
      }
    }
    branch_variants.push_back(std::move(variants));
  }

  std::vector<RelationExpr> acc = branch_variants[0];
  for (std::size_t i = 1; i < branch_variants.size(); ++i) {
    std::vector<RelationExpr> next;
    for (const auto& a : acc) {
      for (const auto& b : branch_variants[i]) {
        for (BoolOp op : policy.branch_ops) {
          next.push_back(RelationExpr::combine(op, a, b));
        }
      }
    }
    acc = std::move(next);
  }
  for (const auto& e : acc) push(e);
  return out;
}

// ---------------------------------------------------------------------------
// Step 5/6 walk: build composite candidates for one selection.

namespace detail {

struct ComposeState {
  RelationExpr expr = RelationExpr::const_true();
  std::vector<ProvenanceEntry> provenance;
};

class Composer {
 public:
  Composer(const SelectionSet& selection, const PipelineGraph& graph,
           const CombinationPolicy& policy, const DomainSet& universe,
           const AtomRegistry& atoms)
      : selection_(selection), graph_(graph), policy_(policy), universe_(universe),
        atoms_(atoms), topo_(graph.topological_order()),
        groups_(graph.branch_groups()) {
    for (const auto& [group, members] : groups_) {
      for (const auto& m : members) member_group_[m] = group;
    }
  }

  std::vector<ComposeState> run() {
    ComposeState init;
    return walk(0, {}, {}, init);
  }

 private:
  RelationExpr chosen(const std::string& vertex,
                      const std::set<std::string>& disabled) const {
    auto it = selection_.chosen.find(vertex);
    if (it == selection_.chosen.end()) {
      throw UsageError("selection does not cover vertex '" + vertex + "'");
    }
    // Under a branch view, relations of vertices that cannot execute are
    // replaced by INDEF: they assert the value was in fact not computed.
    if (disabled.count(vertex)) return RelationExpr::indef(it->second);
    return it->second;
  }

  static ComposeState conjoin(const ComposeState& st, const RelationExpr& term,
                              int step, const std::string& note) {
    ComposeState out = st;
    out.expr = out.expr.kind() == ExprKind::ConstTrue ? term
                                                      : RelationExpr::and_(out.expr, term);
    out.provenance.push_back({step, note});
    return out;
  }

  // Walks producers in topological order from position `pos` onward.
  // `conjoined` holds vertices whose relation already entered the composite.
  std::vector<ComposeState> walk(std::size_t pos, std::set<std::string> conjoined,
                                 std::set<std::string> disabled, ComposeState state) {
    std::vector<ComposeState> states{state};
    for (std::size_t i = pos; i < topo_.size(); ++i) {
      const std::string& b = topo_[i];

      if (!graph_.uses_vertex_outputs(b) && !conjoined.count(b) && !member_group_.count(b)) {
        conjoined.insert(b);
        const RelationExpr term = chosen(b, disabled);
        for (auto& st : states) {
          st = conjoin(st, term, 5, "source vertex " + b + ": conjoin its relation");
        }
      }

      // Consumers of b's outputs that have not been folded in yet.
      std::vector<std::string> pending;
      for (const auto& c : graph_.consumers(b)) {
        if (!conjoined.count(c)) pending.push_back(c);
      }
      if (pending.empty()) continue;

      // Branch-group members among the consumers form their own units.
      std::map<std::string, std::vector<std::string>> group_units;
      std::vector<std::string> plain;
      for (const auto& c : pending) {
        auto it = member_group_.find(c);
        if (it != member_group_.end()) {
          group_units[it->second].push_back(c);
        } else {
          plain.push_back(c);
        }
      }

      for (const auto& [group, members_here] : group_units) {
        const std::vector<std::string>& members = groups_.at(group);
        for (const auto& m : members) conjoined.insert(m);

        std::vector<std::pair<std::string, RelationExpr>> member_relations;
        for (const auto& m : members) member_relations.emplace_back(m, chosen(m, disabled));

        if (policy_.branch_mode == BranchMode::Joint || members.size() == 1) {
          auto terms = handle_branches(member_relations, BranchMode::Joint, policy_,
                                       universe_, atoms_);
          std::vector<ComposeState> next;
          for (const auto& st : states) {
            for (const auto& term : terms) {
              next.push_back(conjoin(st, term, 6,
                                     "branch group " + group + " (joint): " + to_text(term)));
            }
          }
          states = std::move(next);
          continue;
        }

        // PER_BRANCH: the rest of the walk happens inside each branch view;
        // everything downstream folds into the per-branch composites.
        std::map<std::string, std::vector<RelationExpr>> suffixes;
        for (const auto& m : members) {
          std::set<std::string> other(members.begin(), members.end());
          other.erase(m);
          // Under m's view the other members do not run, and neither does
          // anything reachable only through them.
          std::set<std::string> view_disabled = disabled;
          for (const auto& o : other) view_disabled.insert(o);
          const auto via_m = graph_.downstream_of({m});
          for (const auto& d : graph_.downstream_of(other)) {
            if (d != m && !via_m.count(d)) view_disabled.insert(d);
          }
          ComposeState blank;
          auto branch_states = walk(i, conjoined, view_disabled, blank);
          std::vector<RelationExpr> exprs;
          std::set<std::string> seen;
          for (const auto& bs : branch_states) {
            if (bs.expr.kind() == ExprKind::ConstTrue) continue;
            if (seen.insert(canonical_text(bs.expr)).second) exprs.push_back(bs.expr);
          }
          suffixes[m] = std::move(exprs);
        }

        auto joined = handle_branches(member_relations, BranchMode::PerBranch, policy_,
                                      universe_, atoms_, suffixes);
        std::vector<ComposeState> next;
        for (const auto& st : states) {
          for (const auto& term : joined) {
            next.push_back(conjoin(st, term, 6,
                                   "branch group " + group + " (per-branch): " + to_text(term)));
          }
        }
        return next;  // the fork consumed the remaining walk
      }

      if (plain.empty()) continue;
      std::sort(plain.begin(), plain.end());
      for (const auto& c : plain) conjoined.insert(c);

      if (plain.size() == 1) {
        const RelationExpr term = chosen(plain[0], disabled);
        for (auto& st : states) {
          st = conjoin(st, term, 5, "sole consumer " + plain[0] + " of " + b);
        }
        continue;
      }

      std::vector<RelationExpr> relations;
      for (const auto& c : plain) relations.push_back(chosen(c, disabled));
      auto variants = fanout_combinations(relations, policy_, universe_, atoms_);
      std::vector<ComposeState> next;
      for (const auto& st : states) {
        for (const auto& v : variants) {
          next.push_back(conjoin(st, v, 5, "fan-out at " + b + ": " + to_text(v)));
        }
      }
      states = std::move(next);
    }
    return states;
  }

  const SelectionSet& selection_;
  const PipelineGraph& graph_;
  const CombinationPolicy& policy_;
  const DomainSet& universe_;
  const AtomRegistry& atoms_;
  std::vector<std::string> topo_;
  std::map<std::string, std::vector<std::string>> groups_;
  std::map<std::string, std::string> member_group_;
};

}  // namespace detail

// Builds composite candidates for one selection: topological walk, fan-out
// combination, branch handling, cross-vertex relations appended as final
// conjuncts. Candidates are returned before the step-7 domain filter.
inline std::vector<CompositeCandidate> compose(const SelectionSet& selection,
                                               const PipelineGraph& graph,
                                               const CombinationPolicy& policy,
                                               const DomainSet& universe,
                                               const AtomRegistry& atoms,
                                               const std::vector<RelationExpr>& cross_relations = {}) {
  detail::Composer composer(selection, graph, policy, universe, atoms);
  auto states = composer.run();

  std::vector<CompositeCandidate> out;
  std::set<std::string> seen;
  for (auto& st : states) {
    RelationExpr expr = st.expr;
    for (const auto& cross : cross_relations) {
      expr = expr.kind() == ExprKind::ConstTrue ? cross : RelationExpr::and_(expr, cross);
      st.provenance.push_back({5, "cross-vertex conjunct: " + to_text(cross)});
    }
    expr = simplify(expr);
    if (!seen.insert(canonical_text(expr)).second) continue;
    CompositeCandidate cand;
    cand.expr = expr;
    cand.domain = domain_of(expr, universe, atoms);
    cand.provenance = std::move(st.provenance);
    out.push_back(std::move(cand));
  }
  return out;
}

// ---------------------------------------------------------------------------
// The full algorithm.

struct DeriveResult {
  std::vector<CompositeCandidate> candidates;
  std::size_t selections_total = 0;
  std::size_t selections_tried = 0;
  std::vector<std::string> exhausted_notes;  // why selections produced nothing

  bool exhausted() const { return candidates.empty(); }
};

namespace detail {

// Classes on which a vertex is statically known not to execute, from branch
// declarations. A vertex whose execution is tied to branch member m (m itself,
// or anything consuming m's outputs transitively) is skipped whenever a
// different member of m's group is selected. Returns nullopt when the gating
// members lack class declarations (conditions unknown -> DEF wrap).
inline std::optional<DomainSet> known_skip_classes(const std::string& vertex,
                                                   const PipelineGraph& graph) {
  DomainSet skip;
  for (const auto& [group, members] : graph.branch_groups()) {
    std::vector<std::string> tied;  // members whose selection lets `vertex` run
    bool is_member = std::find(members.begin(), members.end(), vertex) != members.end();
    if (is_member) {
      tied = {vertex};
    } else {
      for (const auto& m : members) {
        if (graph.downstream_of({m}).count(vertex)) tied.push_back(m);
      }
      if (tied.empty()) continue;                   // not gated by this group
      if (tied.size() == members.size()) continue;  // reachable from every member
    }
    for (const auto& m : members) {
      if (std::find(tied.begin(), tied.end(), m) != tied.end()) continue;
      if (graph.vertex(m).branch_classes.empty()) return std::nullopt;
      skip = skip.union_with(graph.vertex(m).branch_classes);
    }
  }
  return skip;
}

}  // namespace detail

inline DeriveResult derive(const PipelineGraph& graph, const std::vector<RelationSet>& sets,
                           const CombinationPolicy& policy, std::size_t cap,
                           const DomainSet& universe, AtomRegistry& atoms) {
  graph.ensure_valid();

  std::vector<RelationSet> vertex_sets;
  std::vector<RelationExpr> cross_relations;
  for (const auto& s : sets) {
    if (s.vertex == kCrossVertex) {
      // Cross-vertex relations are never combined in step 1; they join every
      // composite as final conjuncts.
      for (const auto& r : s.relations) cross_relations.push_back(r);
    } else {
      if (!graph.has_vertex(s.vertex)) {
        throw ConfigError("relation set for unknown vertex '" + s.vertex + "'");
      }
      vertex_sets.push_back(s);
    }
  }
  {
    std::set<std::string> covered;
    for (const auto& s : vertex_sets) covered.insert(s.vertex);
    for (const auto& [id, v] : graph.vertices()) {
      if (!covered.count(id)) {
        throw ConfigError("no relation set declared for vertex '" + id + "'");
      }
    }
  }

  // Step 1.
  std::vector<RelationSet> extended;
  for (const auto& s : vertex_sets) {
    extended.push_back(extend_set(s, policy, universe, atoms));
  }

  // Step 2. Relations that can be skipped at runtime get DEF-wrapped or,
  // when the skip classes are known, split into a restricted part plus INDEF.
  for (auto& s : extended) {
    const auto skip = detail::known_skip_classes(s.vertex, graph);
    std::vector<RelationExpr> rewritten;
    for (const auto& r : s.relations) {
      if (r.kind() == ExprKind::Atom) {
        const auto& atom = atoms.at(r.atom_id());
        if (atom.reads_group_output && atom.not_computed_classes.empty()) {
          rewritten.push_back(r);
          continue;
        }
        if (!skip.has_value()) {
          rewritten.push_back(RelationExpr::def(r));
          continue;
        }
        DomainSet atom_skip = atom.not_computed_classes;
        if (!atom.reads_group_output) atom_skip = atom_skip.union_with(*skip);
        atom_skip = atom_skip.intersect(atom.domain);
        if (atom_skip.empty()) {
          rewritten.push_back(r);
          continue;
        }
        auto split = split_partial(atom, atom_skip);
        for (auto& derived : split.derived_atoms) {
          if (!atoms.contains(derived.id)) atoms.add(derived);
        }
        for (auto& part : split.parts) rewritten.push_back(part);
        continue;
      }
      // Compound relation: cannot split, totalize when any of its classes
      // can be affected by a skip.
      if (!skip.has_value()) {
        rewritten.push_back(RelationExpr::def(r));
        continue;
      }
      DomainSet dom = domain_of(r, universe, atoms);
      if (skip->intersect(dom).empty()) {
        rewritten.push_back(r);
      } else {
        rewritten.push_back(RelationExpr::def(r));
      }
    }
    s.relations = std::move(rewritten);
  }

  // Step 3.
  auto enumeration = enumerate_selections(extended, cap);

  DeriveResult result;
  result.selections_total = enumeration.total;
  result.selections_tried = enumeration.selections.size();

  std::set<std::string> seen;
  std::size_t sel_index = 0;
  for (const auto& selection : enumeration.selections) {
    ++sel_index;
    // Step 4.
    SelectionSet wrapped = propagate_def(selection, graph);

    // Steps 5 and 6.
    auto candidates = compose(wrapped, graph, policy, universe, atoms, cross_relations);

    // Step 7: keep non-empty domains.
    std::size_t kept = 0;
    for (auto& cand : candidates) {
      if (cand.domain.empty()) continue;
      if (!seen.insert(canonical_text(cand.expr)).second) continue;
      std::string sel_note = "selection #" + std::to_string(sel_index) + ":";
      for (const auto& [v, r] : selection.chosen) {
        sel_note += " " + v + "=" + to_text(r);
      }
      cand.provenance.insert(cand.provenance.begin(), ProvenanceEntry{3, sel_note});
      cand.provenance.push_back({7, "domain " + cand.domain.to_string()});
      result.candidates.push_back(std::move(cand));
      ++kept;
      if (result.candidates.size() >= policy.candidate_cap) break;
    }
    if (kept == 0) {
      result.exhausted_notes.push_back("selection #" + std::to_string(sel_index) +
                                       " produced no candidate with a non-empty domain");
    }
    if (result.candidates.size() >= policy.candidate_cap) break;
  }
  return result;
}

}  // namespace metapipe

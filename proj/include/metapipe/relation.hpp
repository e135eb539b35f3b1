#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metapipe/domain.hpp"
#include "metapipe/errors.hpp"
#include "metapipe/trace.hpp"
#include "metapipe/trivalue.hpp"

namespace metapipe {

// Sentinel vertex id for relations spanning several components (like the
// germline/somatic consistency condition).
inline constexpr const char* kCrossVertex = "@cross";

using VerdictFn = std::function<TriValue(const TestGroup&, const ExecutionTrace&)>;

// Optional hook: per-adjacent-pair violation flags, feeding the failures
// metric table. Only meaningful for series-shaped relations.
using PairFlagsFn =
    std::function<std::optional<std::vector<bool>>(const TestGroup&, const ExecutionTrace&)>;

struct RelationAtom {
  std::string id;
  std::string vertex;               // vertex id or kCrossVertex
  std::vector<std::string> reads;   // observed vertices; defaults to {vertex}
  DomainSet domain;
  int arity = 2;                    // minimum number of test inputs related
  VerdictFn verdict;
  PairFlagsFn pair_flags;
  // Classes (within the domain) on which this relation is statically known to
  // be skipped at runtime; feeds step 2 of the derivation.
  DomainSet not_computed_classes;
  // A branch-member relation that reads the group's merged output is computed
  // no matter which member ran; such relations are exempt from the structural
  // skip analysis.
  bool reads_group_output = false;

  bool cross() const { return vertex == kCrossVertex; }

  std::vector<std::string> observed_vertices() const {
    if (!reads.empty()) return reads;
    if (!cross()) return {vertex};
    return {};
  }
};

class AtomRegistry {
 public:
  void add(RelationAtom atom) {
    if (atom.id.empty()) throw ConfigError("relation atom with empty id");
    if (atoms_.count(atom.id)) throw ConfigError("duplicate relation atom id: " + atom.id);
    atoms_.emplace(atom.id, std::move(atom));
  }

  bool contains(const std::string& id) const { return atoms_.count(id) > 0; }

  const RelationAtom& at(const std::string& id) const {
    auto it = atoms_.find(id);
    if (it == atoms_.end()) throw ConfigError("unknown relation atom: " + id);
    return it->second;
  }

  const std::map<std::string, RelationAtom>& all() const { return atoms_; }

 private:
  std::map<std::string, RelationAtom> atoms_;
};

inline TriValue eval_atom(const RelationAtom& atom, const TestGroup& group,
                          const ExecutionTrace& trace) {
  if (trace.group_id() != group.id) {
    throw UsageError("trace belongs to group '" + trace.group_id() +
                     "', not '" + group.id + "'");
  }
  if (group.size() < static_cast<std::size_t>(atom.arity)) {
    throw UsageError("relation '" + atom.id + "' relates " + std::to_string(atom.arity) +
                     " inputs, group '" + group.id + "' has " + std::to_string(group.size()));
  }
  if (!atom.domain.contains(group.class_tag)) {
    return TriValue::out_of_domain();
  }
  if (!atom.verdict) {
    throw ConfigError("relation atom '" + atom.id + "' has no verdict function");
  }
  return atom.verdict(group, trace);
}

}  // namespace metapipe

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "metapipe/domain.hpp"
#include "metapipe/errors.hpp"
#include "metapipe/expr.hpp"
#include "metapipe/util.hpp"

#include "json.hpp"

namespace metapipe {

struct PortRef {
  std::string vertex;
  std::string port;

  static PortRef parse(const std::string& text) {
    auto dot = text.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == text.size()) {
      throw ConfigError("bad port reference '" + text + "', expected vertex.port");
    }
    return PortRef{trim(text.substr(0, dot)), trim(text.substr(dot + 1))};
  }

  std::string to_string() const { return vertex + "." + port; }

  friend bool operator==(const PortRef& a, const PortRef& b) {
    return a.vertex == b.vertex && a.port == b.port;
  }
  friend bool operator<(const PortRef& a, const PortRef& b) {
    return std::tie(a.vertex, a.port) < std::tie(b.vertex, b.port);
  }
};

struct EdgeSpec {
  PortRef from, to;

  // "vertex.port -> vertex.port"
  static EdgeSpec parse(const std::string& text) {
    auto arrow = text.find("->");
    if (arrow == std::string::npos) {
      throw ConfigError("bad edge '" + text + "', expected 'a.x -> b.y'");
    }
    return EdgeSpec{PortRef::parse(trim(text.substr(0, arrow))),
                    PortRef::parse(trim(text.substr(arrow + 2)))};
  }

  std::string to_string() const { return from.to_string() + " -> " + to.to_string(); }
};

struct VertexSpec {
  std::string id;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string executor;  // builtin name ("builtin:...") or command template ("cmd:...")
  std::optional<std::string> branch_group;
  // Classes on which this branch member is the selected one. Optional; when
  // declared for a whole group it feeds the derivation's DEF/INDEF step.
  DomainSet branch_classes;
  nlohmann::json config;  // executor parameters
  nlohmann::json fault;   // fault-injection switch (demo executors)

  bool has_input(const std::string& p) const {
    return std::find(inputs.begin(), inputs.end(), p) != inputs.end();
  }
  bool has_output(const std::string& p) const {
    return std::find(outputs.begin(), outputs.end(), p) != outputs.end();
  }
};

struct Subsystem {
  std::set<std::string> vertex_ids;

  bool contains(const std::string& v) const { return vertex_ids.count(v) > 0; }
  bool empty() const { return vertex_ids.empty(); }

  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (const auto& v : vertex_ids) {
      if (!first) out += ", ";
      out += v;
      first = false;
    }
    return out + "}";
  }
};

// The system under test: components with ports, data-flow edges, externally
// fed inputs and read outputs. Immutable once validated; all queries pure.
class PipelineGraph {
 public:
  PipelineGraph& add_vertex(VertexSpec v) {
    if (vertices_.count(v.id)) throw ConfigError("duplicate vertex id: " + v.id);
    order_.push_back(v.id);
    vertices_.emplace(v.id, std::move(v));
    return *this;
  }

  PipelineGraph& add_edge(const std::string& text) { return add_edge(EdgeSpec::parse(text)); }

  PipelineGraph& add_edge(EdgeSpec e) {
    edges_.push_back(std::move(e));
    return *this;
  }

  // `name` is the external input's name; destinations are vertex input ports
  // it feeds. One external input may fan out to several vertices.
  PipelineGraph& add_system_input(const std::string& name, std::vector<PortRef> dests) {
    system_inputs_[name] = std::move(dests);
    return *this;
  }

  PipelineGraph& add_system_output(PortRef p) {
    system_outputs_.push_back(std::move(p));
    return *this;
  }

  const std::map<std::string, VertexSpec>& vertices() const { return vertices_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }
  const std::map<std::string, std::vector<PortRef>>& system_inputs() const {
    return system_inputs_;
  }
  const std::vector<PortRef>& system_outputs() const { return system_outputs_; }

  bool has_vertex(const std::string& id) const { return vertices_.count(id) > 0; }

  const VertexSpec& vertex(const std::string& id) const {
    auto it = vertices_.find(id);
    if (it == vertices_.end()) throw UsageError("unknown vertex: " + id);
    return it->second;
  }

  // All invariant violations; empty means the graph is well-formed.
  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (vertices_.empty()) errors.push_back("graph has no vertices");

    for (const auto& [id, v] : vertices_) {
      if (v.outputs.empty()) errors.push_back("vertex '" + id + "' has no output ports");
      std::set<std::string> seen;
      for (const auto& p : v.inputs) {
        if (!seen.insert(p).second) errors.push_back("vertex '" + id + "' repeats input port '" + p + "'");
      }
      seen.clear();
      for (const auto& p : v.outputs) {
        if (!seen.insert(p).second) errors.push_back("vertex '" + id + "' repeats output port '" + p + "'");
      }
    }

    for (const auto& e : edges_) {
      if (!has_vertex(e.from.vertex)) {
        errors.push_back("edge " + e.to_string() + ": unknown source vertex");
        continue;
      }
      if (!has_vertex(e.to.vertex)) {
        errors.push_back("edge " + e.to_string() + ": unknown target vertex");
        continue;
      }
      if (!vertex(e.from.vertex).has_output(e.from.port)) {
        errors.push_back("edge " + e.to_string() + ": source port does not exist");
      }
      if (!vertex(e.to.vertex).has_input(e.to.port)) {
        errors.push_back("edge " + e.to_string() + ": target port does not exist");
      }
    }

    // Every input port has exactly one feeder (edge or system input).
    std::map<PortRef, int> feeders;
    for (const auto& e : edges_) feeders[e.to]++;
    for (const auto& [name, dests] : system_inputs_) {
      for (const auto& d : dests) {
        if (!has_vertex(d.vertex) || !vertex(d.vertex).has_input(d.port)) {
          errors.push_back("system input '" + name + "' feeds unknown port " + d.to_string());
          continue;
        }
        feeders[d]++;
      }
    }
    for (const auto& [id, v] : vertices_) {
      for (const auto& p : v.inputs) {
        int n = feeders.count({id, p}) ? feeders.at({id, p}) : 0;
        if (n == 0) errors.push_back("input port " + id + "." + p + " is not connected");
        if (n > 1) errors.push_back("fan-in on port " + id + "." + p);
      }
    }

    for (const auto& p : system_outputs_) {
      if (!has_vertex(p.vertex) || !vertex(p.vertex).has_output(p.port)) {
        errors.push_back("system output " + p.to_string() + " does not exist");
      }
    }

    // Branch-group members must agree on port signatures.
    for (const auto& [group, members] : branch_groups()) {
      const auto& first = vertex(members.front());
      for (const auto& m : members) {
        const auto& v = vertex(m);
        if (v.inputs != first.inputs || v.outputs != first.outputs) {
          errors.push_back("branch group '" + group + "': members '" + members.front() +
                           "' and '" + m + "' have different port signatures");
        }
      }
    }

    if (find_cycle()) errors.push_back("cycle detected");
    return errors;
  }

  void ensure_valid() const {
    auto errors = validate();
    if (!errors.empty()) {
      std::string msg = "invalid pipeline graph:";
      for (const auto& e : errors) msg += "\n  - " + e;
      throw UsageError(msg);
    }
  }

  // Kahn's algorithm with lexicographic tie-breaking, so derivation output is
  // reproducible across runs and platforms.
  std::vector<std::string> topological_order() const {
    ensure_valid();
    std::map<std::string, int> indegree;
    std::map<std::string, std::set<std::string>> succ;
    for (const auto& [id, v] : vertices_) indegree[id] = 0;
    for (const auto& e : edges_) {
      if (succ[e.from.vertex].insert(e.to.vertex).second) indegree[e.to.vertex]++;
    }
    std::set<std::string> ready;
    for (const auto& [id, d] : indegree) {
      if (d == 0) ready.insert(id);
    }
    std::vector<std::string> out;
    while (!ready.empty()) {
      std::string v = *ready.begin();
      ready.erase(ready.begin());
      out.push_back(v);
      for (const auto& s : succ[v]) {
        if (--indegree[s] == 0) ready.insert(s);
      }
    }
    return out;
  }

  // The vertex itself plus everything with a directed path to it. When a
  // per-vertex relation fails, the error must live in this subsystem.
  Subsystem ancestors(const std::string& id) const {
    if (!has_vertex(id)) throw UsageError("unknown vertex: " + id);
    std::map<std::string, std::set<std::string>> preds;
    for (const auto& e : edges_) preds[e.to.vertex].insert(e.from.vertex);
    Subsystem sub;
    std::vector<std::string> stack{id};
    while (!stack.empty()) {
      std::string v = stack.back();
      stack.pop_back();
      if (!sub.vertex_ids.insert(v).second) continue;
      for (const auto& p : preds[v]) stack.push_back(p);
    }
    return sub;
  }

  // Distinct vertices consuming any output of `id`.
  std::set<std::string> consumers(const std::string& id) const {
    std::set<std::string> out;
    for (const auto& e : edges_) {
      if (e.from.vertex == id) out.insert(e.to.vertex);
    }
    return out;
  }

  std::set<std::string> direct_producers(const std::string& id) const {
    std::set<std::string> out;
    for (const auto& e : edges_) {
      if (e.to.vertex == id) out.insert(e.from.vertex);
    }
    return out;
  }

  bool uses_vertex_outputs(const std::string& id) const {
    return !direct_producers(id).empty();
  }

  // Feeder of one input port: an edge source, or the system input name.
  std::optional<PortRef> edge_into(const PortRef& port) const {
    for (const auto& e : edges_) {
      if (e.to == port) return e.from;
    }
    return std::nullopt;
  }

  std::optional<std::string> system_input_into(const PortRef& port) const {
    for (const auto& [name, dests] : system_inputs_) {
      for (const auto& d : dests) {
        if (d == port) return name;
      }
    }
    return std::nullopt;
  }

  std::map<std::string, std::vector<std::string>> branch_groups() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [id, v] : vertices_) {
      if (v.branch_group) out[*v.branch_group].push_back(id);
    }
    return out;  // members sorted via map iteration order of vertices_
  }

  // Vertices whose inputs transitively depend on any vertex in `sources`.
  std::set<std::string> downstream_of(const std::set<std::string>& sources) const {
    std::set<std::string> out;
    std::vector<std::string> stack(sources.begin(), sources.end());
    while (!stack.empty()) {
      std::string v = stack.back();
      stack.pop_back();
      for (const auto& c : consumers(v)) {
        if (sources.count(c)) continue;
        if (out.insert(c).second) stack.push_back(c);
      }
    }
    return out;
  }

 private:
  bool find_cycle() const {
    std::map<std::string, int> indegree;
    std::map<std::string, std::set<std::string>> succ;
    for (const auto& [id, v] : vertices_) indegree[id] = 0;
    for (const auto& e : edges_) {
      if (!has_vertex(e.from.vertex) || !has_vertex(e.to.vertex)) continue;
      if (succ[e.from.vertex].insert(e.to.vertex).second) indegree[e.to.vertex]++;
    }
    std::vector<std::string> queue;
    for (const auto& [id, d] : indegree) {
      if (d == 0) queue.push_back(id);
    }
    std::size_t seen = 0;
    while (!queue.empty()) {
      std::string v = queue.back();
      queue.pop_back();
      ++seen;
      for (const auto& s : succ[v]) {
        if (--indegree[s] == 0) queue.push_back(s);
      }
    }
    return seen != vertices_.size();
  }

  std::map<std::string, VertexSpec> vertices_;
  std::vector<std::string> order_;  // declaration order, kept for diagnostics
  std::vector<EdgeSpec> edges_;
  std::map<std::string, std::vector<PortRef>> system_inputs_;
  std::vector<PortRef> system_outputs_;
};

// Restriction of a composite relation to a subsystem: atoms bound to vertices
// outside the subsystem become constant true; relations observing several
// vertices survive only when every observed vertex is inside.
inline RelationExpr subsystem_expr(const RelationExpr& composite, const Subsystem& sub,
                                   const AtomRegistry& atoms) {
  RelationExpr replaced = replace_atoms(
      composite, [&](const std::string& id) -> std::optional<RelationExpr> {
        const RelationAtom& atom = atoms.at(id);
        for (const auto& v : atom.observed_vertices()) {
          if (!sub.contains(v)) return RelationExpr::const_true();
        }
        return std::nullopt;
      });
  return simplify(replaced);
}

}  // namespace metapipe

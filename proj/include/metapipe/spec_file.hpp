#pragma once

// The declarative pipeline-spec file: one JSON document declares the input
// classes, the component graph, the relation atoms, the per-vertex relation
// sets, the derivation policy and the test groups. Driving derivation and
// execution from the same document keeps the derived and the executed
// composite from diverging.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "metapipe/derive.hpp"
#include "metapipe/executor.hpp"
#include "metapipe/graph.hpp"
#include "metapipe/harness.hpp"

#include "json.hpp"

namespace metapipe {

struct VerdictBundle {
  VerdictFn verdict;
  PairFlagsFn pair_flags;
};

// Named verdict builders ("builtin:<name>" in the atoms section).
class VerdictRegistry {
 public:
  using Factory = std::function<VerdictBundle(const nlohmann::json& params)>;

  void add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }
  bool contains(const std::string& name) const { return factories_.count(name) > 0; }

  VerdictBundle make(const std::string& name, const nlohmann::json& params) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown verdict builtin: " + name);
    return it->second(params);
  }

 private:
  std::map<std::string, Factory> factories_;
};

// Named input generators for test groups declared with a "generator" block.
class GeneratorRegistry {
 public:
  using Factory = std::function<TestGroup(const nlohmann::json& params,
                                          const std::string& group_id,
                                          const std::string& class_tag,
                                          const std::filesystem::path& dir)>;

  void add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }

  TestGroup make(const std::string& name, const nlohmann::json& params,
                 const std::string& group_id, const std::string& class_tag,
                 const std::filesystem::path& dir) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown generator: " + name);
    return it->second(params, group_id, class_tag, dir);
  }

 private:
  std::map<std::string, Factory> factories_;
};

struct GroupSpec {
  std::string id;
  std::string class_tag;
  std::vector<std::map<std::string, std::string>> inputs;  // explicit input files
  nlohmann::json generator;                                // or a generator reference
};

struct ParsedSpec {
  DomainSet classes;
  PipelineGraph graph;
  AtomRegistry atoms;
  std::vector<RelationSet> sets;
  CombinationPolicy policy;
  std::vector<GroupSpec> groups;
};

namespace detail {

inline BoolOp bool_op_from_string(const std::string& s, const std::string& where) {
  if (s == "and") return BoolOp::And;
  if (s == "or") return BoolOp::Or;
  if (s == "xor") return BoolOp::Xor;
  if (s == "hat_and") return BoolOp::HatAnd;
  if (s == "hat_or") return BoolOp::HatOr;
  if (s == "hat_xor") return BoolOp::HatXor;
  throw ConfigError(where + ": unknown operator '" + s + "'");
}

// Turns a checker command template into a verdict: the command sees the
// persisted trace and the group; exit 0 is true, 1 false, 75 not computed.
inline VerdictFn make_command_verdict(const std::string& command_template) {
  return [command_template](const TestGroup& group, const ExecutionTrace& trace) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "metapipe-checker" /
                   (group.id + "-" + fnv1a64_hex(command_template));
    fs::create_directories(dir);
    fs::path trace_path = dir / "trace.json";
    spit(trace_path, trace_to_json(trace).dump(2) + "\n");
    std::string cmd = command_template;
    auto replace_all = [&cmd](const std::string& what, const std::string& with) {
      std::size_t at = 0;
      while ((at = cmd.find(what, at)) != std::string::npos) {
        cmd.replace(at, what.size(), with);
        at += with.size();
      }
    };
    replace_all("{trace}", trace_path.string());
    replace_all("{group}", group.id);
    replace_all("{class}", group.class_tag);
    replace_all("{n}", std::to_string(group.size()));
    int rc = std::system(cmd.c_str());
    int status = rc == -1 ? -1 : WEXITSTATUS(rc);
    if (status == 0) return TriValue::make_true();
    if (status == 1) return TriValue::make_false();
    if (status == 75) return TriValue::not_computed();
    throw UsageError("external checker exited with unexpected status " +
                     std::to_string(status) + ": " + cmd);
  };
}

}  // namespace detail

inline ParsedSpec parse_spec(const nlohmann::json& j, const VerdictRegistry& verdicts) {
  ParsedSpec spec;
  std::vector<std::string> errors;
  auto fail = [&errors](const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  };

  try {
    for (const auto& c : j.at("classes")) spec.classes.insert(c.get<std::string>());
    if (spec.classes.empty()) fail("/classes", "at least one input class is required");
  } catch (const nlohmann::json::exception& e) {
    fail("/classes", e.what());
  }

  if (j.contains("vertices")) {
    std::size_t idx = 0;
    for (const auto& v : j.at("vertices")) {
      const std::string where = "/vertices/" + std::to_string(idx++);
      try {
        VertexSpec vs;
        vs.id = v.at("id").get<std::string>();
        for (const auto& p : v.value("inputs", nlohmann::json::array())) {
          vs.inputs.push_back(p.get<std::string>());
        }
        for (const auto& p : v.value("outputs", nlohmann::json::array())) {
          vs.outputs.push_back(p.get<std::string>());
        }
        vs.executor = v.at("executor").get<std::string>();
        if (v.contains("branch_group")) {
          vs.branch_group = v.at("branch_group").get<std::string>();
        }
        for (const auto& c : v.value("branch_classes", nlohmann::json::array())) {
          std::string cls = c.get<std::string>();
          if (!spec.classes.contains(cls)) fail(where + "/branch_classes", "unknown class " + cls);
          vs.branch_classes.insert(cls);
        }
        vs.config = v.value("config", nlohmann::json());
        vs.fault = v.value("fault", nlohmann::json());
        spec.graph.add_vertex(std::move(vs));
      } catch (const std::exception& e) {
        fail(where, e.what());
      }
    }
  } else {
    fail("/vertices", "missing");
  }

  std::size_t idx = 0;
  for (const auto& e : j.value("edges", nlohmann::json::array())) {
    const std::string where = "/edges/" + std::to_string(idx++);
    try {
      spec.graph.add_edge(e.get<std::string>());
    } catch (const std::exception& ex) {
      fail(where, ex.what());
    }
  }
  const nlohmann::json system_inputs = j.value("system_inputs", nlohmann::json::object());
  for (const auto& [name, dests] : system_inputs.items()) {
    try {
      std::vector<PortRef> ports;
      for (const auto& d : dests) ports.push_back(PortRef::parse(d.get<std::string>()));
      spec.graph.add_system_input(name, std::move(ports));
    } catch (const std::exception& ex) {
      fail("/system_inputs/" + name, ex.what());
    }
  }
  for (const auto& o : j.value("system_outputs", nlohmann::json::array())) {
    try {
      spec.graph.add_system_output(PortRef::parse(o.get<std::string>()));
    } catch (const std::exception& ex) {
      fail("/system_outputs", ex.what());
    }
  }
  for (const auto& problem : spec.graph.validate()) {
    fail("/vertices", problem);
  }

  idx = 0;
  for (const auto& a : j.value("atoms", nlohmann::json::array())) {
    const std::string where = "/atoms/" + std::to_string(idx++);
    try {
      RelationAtom atom;
      atom.id = a.at("id").get<std::string>();
      atom.vertex = a.at("vertex").get<std::string>();
      if (atom.vertex != kCrossVertex && !spec.graph.has_vertex(atom.vertex)) {
        fail(where, "unknown vertex '" + atom.vertex + "'");
        continue;
      }
      for (const auto& r : a.value("reads", nlohmann::json::array())) {
        std::string v = r.get<std::string>();
        if (!spec.graph.has_vertex(v)) fail(where + "/reads", "unknown vertex " + v);
        atom.reads.push_back(std::move(v));
      }
      for (const auto& c : a.at("domain")) {
        std::string cls = c.get<std::string>();
        if (!spec.classes.contains(cls)) {
          fail(where + "/domain", "unknown class " + cls);
          continue;
        }
        atom.domain.insert(cls);
      }
      atom.arity = a.value("arity", 2);
      if (atom.arity < 2) fail(where, "arity must be >= 2");
      atom.reads_group_output = a.value("reads_group_output", false);
      for (const auto& c : a.value("not_computed_classes", nlohmann::json::array())) {
        atom.not_computed_classes.insert(c.get<std::string>());
      }
      const std::string verdict = a.at("verdict").get<std::string>();
      if (verdict.rfind("cmd:", 0) == 0) {
        atom.verdict = detail::make_command_verdict(trim(verdict.substr(4)));
      } else {
        std::string name = verdict;
        if (name.rfind("builtin:", 0) == 0) name = name.substr(8);
        VerdictBundle bundle = verdicts.make(name, a.value("params", nlohmann::json()));
        atom.verdict = std::move(bundle.verdict);
        atom.pair_flags = std::move(bundle.pair_flags);
      }
      spec.atoms.add(std::move(atom));
    } catch (const std::exception& e) {
      fail(where, e.what());
    }
  }

  const nlohmann::json relation_sets = j.value("relation_sets", nlohmann::json::object());
  for (const auto& [vertex, exprs] : relation_sets.items()) {
    const std::string where = "/relation_sets/" + vertex;
    if (vertex != kCrossVertex && !spec.graph.has_vertex(vertex)) {
      fail(where, "unknown vertex");
      continue;
    }
    RelationSet set;
    set.vertex = vertex;
    for (const auto& t : exprs) {
      try {
        RelationExpr e = parse_expr_text(t.get<std::string>());
        for (const auto& id : atoms_of(e)) {
          if (!spec.atoms.contains(id)) {
            fail(where, "unknown atom '" + id + "' in " + t.get<std::string>());
          }
        }
        set.relations.push_back(std::move(e));
      } catch (const std::exception& e) {
        fail(where, e.what());
      }
    }
    spec.sets.push_back(std::move(set));
  }

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    auto ops = [&](const char* key, std::vector<BoolOp> fallback) {
      if (!p.contains(key)) return fallback;
      std::vector<BoolOp> out;
      for (const auto& o : p.at(key)) {
        out.push_back(detail::bool_op_from_string(o.get<std::string>(), "/policy/" + std::string(key)));
      }
      return out;
    };
    spec.policy.extension_ops = ops("extension_ops", spec.policy.extension_ops);
    spec.policy.fanout_ops = ops("fanout_ops", spec.policy.fanout_ops);
    spec.policy.branch_ops = ops("branch_ops", spec.policy.branch_ops);
    spec.policy.extension_rounds = p.value("extension_rounds", spec.policy.extension_rounds);
    spec.policy.set_cap = p.value("set_cap", spec.policy.set_cap);
    spec.policy.fanout_cap = p.value("fanout_cap", spec.policy.fanout_cap);
    spec.policy.candidate_cap = p.value("candidate_cap", spec.policy.candidate_cap);
    std::string mode = p.value("branch_mode", std::string("joint"));
    if (mode == "joint") {
      spec.policy.branch_mode = BranchMode::Joint;
    } else if (mode == "per-branch") {
      spec.policy.branch_mode = BranchMode::PerBranch;
    } else {
      fail("/policy/branch_mode", "expected 'joint' or 'per-branch', got '" + mode + "'");
    }
  }

  idx = 0;
  for (const auto& g : j.value("groups", nlohmann::json::array())) {
    const std::string where = "/groups/" + std::to_string(idx++);
    try {
      GroupSpec group;
      group.id = g.at("id").get<std::string>();
      group.class_tag = g.at("class").get<std::string>();
      if (!spec.classes.contains(group.class_tag)) {
        fail(where, "unknown class '" + group.class_tag + "'");
      }
      if (g.contains("generator")) {
        group.generator = g.at("generator");
      } else if (g.contains("inputs")) {
        for (const auto& bundle : g.at("inputs")) {
          std::map<std::string, std::string> files;
          for (const auto& [name, path] : bundle.items()) {
            files[name] = path.get<std::string>();
          }
          group.inputs.push_back(std::move(files));
        }
        if (group.inputs.size() < 2) fail(where, "a test group needs at least 2 inputs");
      } else {
        fail(where, "group needs either 'inputs' or 'generator'");
      }
      spec.groups.push_back(std::move(group));
    } catch (const std::exception& e) {
      fail(where, e.what());
    }
  }

  if (!errors.empty()) {
    std::string msg = "spec validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return spec;
}

inline ParsedSpec parse_spec_file(const std::filesystem::path& path,
                                  const VerdictRegistry& verdicts) {
  std::string text = slurp(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + e.what());
  }
  return parse_spec(j, verdicts);
}

// Materializes one test group: explicit inputs verbatim, generated groups via
// the registered generator into `dir`.
inline TestGroup materialize_group(const GroupSpec& group, const GeneratorRegistry& generators,
                                   const std::filesystem::path& dir) {
  if (!group.generator.is_null() && group.generator.is_object()) {
    std::string name = group.generator.value("name", std::string());
    if (name.empty()) throw ConfigError("group '" + group.id + "': generator needs a name");
    return generators.make(name, group.generator, group.id, group.class_tag, dir);
  }
  TestGroup out;
  out.id = group.id;
  out.class_tag = group.class_tag;
  out.inputs = group.inputs;
  for (const auto& bundle : out.inputs) {
    for (const auto& [name, path] : bundle) {
      if (!std::filesystem::exists(path)) {
        throw ConfigError("group '" + group.id + "': input file does not exist: " + path);
      }
    }
  }
  return out;
}

}  // namespace metapipe

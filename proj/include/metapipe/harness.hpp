#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "metapipe/derive.hpp"
#include "metapipe/executor.hpp"
#include "metapipe/expr.hpp"
#include "metapipe/graph.hpp"
#include "metapipe/trace.hpp"

#include "json.hpp"

namespace metapipe {

// ---------------------------------------------------------------------------
// Trace persistence. The manifest plus the content-addressed object store
// make a run resumable and allow offline re-evaluation of relations.

// Paths are stored relative to the workdir, so equal runs in different
// workdirs persist byte-identical manifests.
inline nlohmann::json trace_to_json(const ExecutionTrace& trace,
                                    const std::filesystem::path& workdir = {}) {
  auto encode_path = [&workdir](const std::string& path) {
    if (workdir.empty()) return path;
    return std::filesystem::path(path).lexically_proximate(workdir).generic_string();
  };
  nlohmann::json j;
  j["group_id"] = trace.group_id();
  j["n_tests"] = trace.n_tests();
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [vertex, rows] : trace.records()) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const VertexRecord& rec = rows[k];
      nlohmann::json r;
      r["vertex"] = vertex;
      r["test"] = k;
      r["status"] = rec.status == RecordStatus::Executed ? "executed" : "skipped";
      r["failed"] = rec.failed;
      r["diagnostic"] = rec.diagnostic;
      nlohmann::json ins = nlohmann::json::object(), outs = nlohmann::json::object();
      for (const auto& [port, ref] : rec.inputs) {
        ins[port] = {{"path", encode_path(ref.path)}, {"digest", ref.digest}};
      }
      for (const auto& [port, ref] : rec.outputs) {
        outs[port] = {{"path", encode_path(ref.path)}, {"digest", ref.digest}};
      }
      r["inputs"] = ins;
      r["outputs"] = outs;
      records.push_back(r);
    }
  }
  j["records"] = records;
  return j;
}

inline ExecutionTrace trace_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& workdir = {}) {
  auto decode_path = [&workdir](const std::string& path) {
    std::filesystem::path p(path);
    if (workdir.empty() || p.is_absolute()) return p.string();
    return (workdir / p).lexically_normal().string();
  };
  ExecutionTrace trace(j.at("group_id").get<std::string>(), j.at("n_tests").get<std::size_t>());
  for (const auto& r : j.at("records")) {
    VertexRecord rec;
    rec.status = r.at("status").get<std::string>() == "executed" ? RecordStatus::Executed
                                                                 : RecordStatus::Skipped;
    rec.failed = r.at("failed").get<bool>();
    rec.diagnostic = r.at("diagnostic").get<std::string>();
    for (const auto& [port, ref] : r.at("inputs").items()) {
      rec.inputs[port] = FileRef{decode_path(ref.at("path").get<std::string>()),
                                 ref.at("digest").get<std::string>()};
    }
    for (const auto& [port, ref] : r.at("outputs").items()) {
      rec.outputs[port] = FileRef{decode_path(ref.at("path").get<std::string>()),
                                  ref.at("digest").get<std::string>()};
    }
    trace.set_record(r.at("vertex").get<std::string>(), r.at("test").get<std::size_t>(),
                     std::move(rec));
  }
  return trace;
}

inline void persist_trace(const ExecutionTrace& trace, const std::filesystem::path& workdir) {
  spit(workdir / "trace.json", trace_to_json(trace, workdir).dump(2) + "\n");
}

inline ExecutionTrace load_trace(const std::filesystem::path& workdir) {
  return trace_from_json(nlohmann::json::parse(slurp(workdir / "trace.json")), workdir);
}

// ---------------------------------------------------------------------------
// Series execution.

namespace detail {

inline FileRef store_object(const std::filesystem::path& workdir,
                            const std::filesystem::path& staged) {
  std::string content = slurp(staged);
  std::string digest = fnv1a64_hex(content);
  std::filesystem::path target = workdir / "objects" / (digest + ".dat");
  if (!std::filesystem::exists(target)) {
    std::filesystem::create_directories(target.parent_path());
    std::filesystem::copy_file(staged, target,
                               std::filesystem::copy_options::overwrite_existing);
  }
  return FileRef{target.string(), digest};
}

inline FileRef ref_for_existing(const std::string& path) {
  return FileRef{path, fnv1a64_hex(slurp(path))};
}

}  // namespace detail

struct RunOptions {
  bool resume = true;
};

// Executes one test series: every test index in turn, vertices in topological
// order, outputs routed to consumers through the content-addressed store.
// Executor failures are recorded, not thrown: downstream vertices are skipped
// and their relations see NotComputed values.
inline ExecutionTrace run_series(const PipelineGraph& graph, const TestGroup& group,
                                 const std::filesystem::path& workdir,
                                 const ExecutorRegistry& executors,
                                 const RunOptions& options = {}) {
  graph.ensure_valid();
  if (group.size() < 2) {
    throw UsageError("test group '" + group.id + "' must hold at least 2 inputs");
  }
  std::filesystem::create_directories(workdir);

  ExecutionTrace previous;
  bool have_previous = false;
  if (options.resume && std::filesystem::exists(workdir / "trace.json")) {
    try {
      previous = load_trace(workdir);
      have_previous = previous.group_id() == group.id && previous.n_tests() == group.size();
    } catch (const std::exception&) {
      have_previous = false;  // unreadable checkpoint, redo from scratch
    }
  }

  const auto topo = graph.topological_order();
  const auto groups = graph.branch_groups();
  std::map<std::string, std::string> member_group;
  for (const auto& [g, members] : groups) {
    for (const auto& m : members) member_group[m] = g;
  }

  ExecutionTrace trace(group.id, group.size());
  std::map<std::string, Executor> cache;

  try {
    for (std::size_t k = 0; k < group.size(); ++k) {
      std::set<std::string> executed_groups;
      for (const auto& vid : topo) {
        const VertexSpec& vspec = graph.vertex(vid);
        VertexRecord rec;

        // Route inputs.
        bool missing_input = false;
        std::string missing_note;
        for (const auto& port : vspec.inputs) {
          PortRef self{vid, port};
          if (auto from = graph.edge_into(self)) {
            auto ref = trace.output(from->vertex, from->port, k);
            if (!ref) {
              missing_input = true;
              missing_note = "input " + port + " not produced by " + from->to_string();
              continue;
            }
            rec.inputs[port] = *ref;
          } else if (auto sys = graph.system_input_into(self)) {
            auto it = group.inputs[k].find(*sys);
            if (it == group.inputs[k].end()) {
              throw UsageError("group '" + group.id + "' does not provide system input '" +
                               *sys + "'");
            }
            rec.inputs[port] = detail::ref_for_existing(it->second);
          } else {
            missing_input = true;
            missing_note = "input " + port + " unconnected";
          }
        }

        if (missing_input) {
          rec.status = RecordStatus::Skipped;
          rec.diagnostic = missing_note;
          trace.set_record(vid, k, std::move(rec));
          persist_trace(trace, workdir);
          continue;
        }

        auto it = cache.find(vid);
        if (it == cache.end()) it = cache.emplace(vid, executors.make(vspec)).first;
        const Executor& executor = it->second;

        ExecContext ctx;
        ctx.vertex = vid;
        ctx.test_index = k;
        ctx.group_id = group.id;
        ctx.series_dir = workdir;
        ctx.config = &vspec.config;
        ctx.fault = &vspec.fault;
        for (const auto& [port, ref] : rec.inputs) ctx.input_paths[port] = ref.path;
        for (const auto& port : vspec.outputs) {
          ctx.output_paths[port] =
              (workdir / "stage" / vid / std::to_string(k) / port).string();
        }

        // Branch groups: at most one member executes per test index.
        if (vspec.branch_group) {
          if (executed_groups.count(*vspec.branch_group)) {
            rec.status = RecordStatus::Skipped;
            rec.diagnostic = "another member of branch group '" + *vspec.branch_group +
                             "' already executed";
            trace.set_record(vid, k, std::move(rec));
            persist_trace(trace, workdir);
            continue;
          }
          if (executor.guard && !executor.guard(ctx)) {
            rec.status = RecordStatus::Skipped;
            rec.diagnostic = "branch guard not selected";
            trace.set_record(vid, k, std::move(rec));
            persist_trace(trace, workdir);
            continue;
          }
          executed_groups.insert(*vspec.branch_group);
        }

        // Resume: reuse a completed record when the inputs are unchanged and
        // the stored objects still exist.
        if (have_previous && previous.has_record(vid, k)) {
          const VertexRecord& old = previous.record(vid, k);
          bool reusable = old.status == RecordStatus::Executed && !old.failed &&
                          old.inputs == rec.inputs;
          for (const auto& [port, ref] : old.outputs) {
            if (!std::filesystem::exists(ref.path)) reusable = false;
          }
          if (reusable && old.outputs.size() == vspec.outputs.size()) {
            trace.set_record(vid, k, old);
            persist_trace(trace, workdir);
            continue;
          }
        }

        rec.status = RecordStatus::Executed;
        try {
          if (!executor.run) throw ExecFailure("executor has no run function");
          executor.run(ctx);
          for (const auto& port : vspec.outputs) {
            const std::string& staged = ctx.output_paths[port];
            if (!std::filesystem::exists(staged)) {
              throw ExecFailure("output '" + port + "' was not written");
            }
            rec.outputs[port] = detail::store_object(workdir, staged);
          }
        } catch (const ExecFailure& e) {
          rec.failed = true;
          rec.diagnostic = e.what();
          rec.outputs.clear();
        }
        trace.set_record(vid, k, std::move(rec));
        persist_trace(trace, workdir);
      }
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    // I/O or environment trouble: leave the checkpoint behind and report.
    persist_trace(trace, workdir);
    throw ConfigError(std::string("series run aborted (resumable): ") + e.what());
  }
  std::filesystem::remove_all(workdir / "stage");
  return trace;
}

// ---------------------------------------------------------------------------
// Relation evaluation with failure localization.

struct Verdict {
  std::string group_id;
  TriValue composite_value;
  std::map<std::string, TriValue> atom_values;
  Subsystem suspects;  // non-empty iff composite_value is false
};

namespace detail {

// Vertices to blame: every atom that evaluated false, plus atoms under an
// INDEF node that evaluated false (the value existed although the branch
// should have skipped it).
inline void collect_false_vertices(const RelationExpr& e, const AtomRegistry& atoms,
                                   const TestGroup& group, const ExecutionTrace& trace,
                                   std::set<std::string>& out) {
  switch (e.kind()) {
    case ExprKind::ConstTrue:
      return;
    case ExprKind::Atom: {
      if (eval_atom(atoms.at(e.atom_id()), group, trace).is_false()) {
        for (const auto& v : atoms.at(e.atom_id()).observed_vertices()) out.insert(v);
      }
      return;
    }
    case ExprKind::Def:
      collect_false_vertices(e.child(), atoms, group, trace, out);
      return;
    case ExprKind::Indef: {
      if (eval_expr(e, atoms, group, trace).is_false()) {
        for (const auto& id : atoms_of(e.child())) {
          for (const auto& v : atoms.at(id).observed_vertices()) out.insert(v);
        }
      }
      return;
    }
    default:
      collect_false_vertices(e.lhs(), atoms, group, trace, out);
      collect_false_vertices(e.rhs(), atoms, group, trace, out);
  }
}

}  // namespace detail

inline Verdict evaluate(const CompositeCandidate& candidate, const TestGroup& group,
                        const ExecutionTrace& trace, const PipelineGraph& graph,
                        const AtomRegistry& atoms) {
  if (!candidate.domain.contains(group.class_tag)) {
    throw UsageError("group '" + group.id + "' (class " + group.class_tag +
                     ") lies outside the composite's domain " + candidate.domain.to_string());
  }
  Verdict v;
  v.group_id = group.id;
  for (const auto& id : atoms_of(candidate.expr)) {
    v.atom_values[id] = eval_atom(atoms.at(id), group, trace);
  }
  v.composite_value = eval_expr(candidate.expr, atoms, group, trace);

  if (v.composite_value.is_false()) {
    std::set<std::string> blamed;
    detail::collect_false_vertices(candidate.expr, atoms, group, trace, blamed);
    if (blamed.empty()) {
      // No individual relation is false yet the composite is: localization
      // cannot narrow further, blame every observed vertex.
      for (const auto& id : atoms_of(candidate.expr)) {
        for (const auto& w : atoms.at(id).observed_vertices()) blamed.insert(w);
      }
    }
    for (const auto& b : blamed) {
      for (const auto& a : graph.ancestors(b).vertex_ids) v.suspects.vertex_ids.insert(a);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Failures metric: fraction of adjacent pairs violating subset monotonicity.

template <typename T>
double failures_metric(const std::vector<std::set<T>>& series_outputs) {
  if (series_outputs.size() < 2) {
    throw UsageError("failures metric needs at least 2 outputs, got " +
                     std::to_string(series_outputs.size()));
  }
  std::size_t violations = 0;
  for (std::size_t j = 0; j + 1 < series_outputs.size(); ++j) {
    const auto& cur = series_outputs[j];
    const auto& next = series_outputs[j + 1];
    if (!std::includes(next.begin(), next.end(), cur.begin(), cur.end())) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(series_outputs.size() - 1);
}

inline double failures_fraction(const std::vector<bool>& violation_flags) {
  if (violation_flags.empty()) return 0.0;
  std::size_t n = 0;
  for (bool b : violation_flags) n += b ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(violation_flags.size());
}

// ---------------------------------------------------------------------------
// Reporting: per-composite failed-test fraction with per-atom false fractions
// (one table), per-atom failures metric by configuration (the other), plus a
// machine-readable summary.

struct RunReport {
  std::string composite_text;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> group_class;  // group id -> class tag
  double failed_fraction = 0.0;
  std::map<std::string, double> atom_false_fraction;
  // class tag -> atom id -> mean failures metric over its groups
  std::map<std::string, std::map<std::string, double>> failures_by_config;
  // group id -> atom id -> failures metric
  std::map<std::string, std::map<std::string, double>> failures_by_group;
};

inline RunReport build_report(const CompositeCandidate& candidate,
                              const std::vector<std::pair<TestGroup, ExecutionTrace>>& runs,
                              const PipelineGraph& graph, const AtomRegistry& atoms) {
  RunReport report;
  report.composite_text = to_text(candidate.expr);

  std::map<std::string, std::size_t> false_counts;
  std::size_t failed = 0;
  std::map<std::string, std::map<std::string, std::vector<double>>> metric_samples;

  for (const auto& [group, trace] : runs) {
    Verdict v = evaluate(candidate, group, trace, graph, atoms);
    if (v.composite_value.is_false()) ++failed;
    for (const auto& [id, val] : v.atom_values) {
      if (val.is_false()) false_counts[id]++;
    }
    report.group_class[group.id] = group.class_tag;

    for (const auto& id : atoms_of(candidate.expr)) {
      const RelationAtom& atom = atoms.at(id);
      if (!atom.pair_flags || !atom.domain.contains(group.class_tag)) continue;
      auto flags = atom.pair_flags(group, trace);
      if (!flags) continue;
      double f = failures_fraction(*flags);
      report.failures_by_group[group.id][id] = f;
      metric_samples[group.class_tag][id].push_back(f);
    }
    report.verdicts.push_back(std::move(v));
  }

  const double n = static_cast<double>(runs.size());
  report.failed_fraction = runs.empty() ? 0.0 : failed / n;
  for (const auto& id : atoms_of(candidate.expr)) {
    std::size_t c = false_counts.count(id) ? false_counts.at(id) : 0;
    report.atom_false_fraction[id] = runs.empty() ? 0.0 : c / n;
  }
  for (const auto& [cls, per_atom] : metric_samples) {
    for (const auto& [id, samples] : per_atom) {
      double sum = 0;
      for (double s : samples) sum += s;
      report.failures_by_config[cls][id] = samples.empty() ? 0.0 : sum / samples.size();
    }
  }
  return report;
}

// Failed-tests table: one row per composite, one column per atom.
inline std::string render_failed_tests_csv(const RunReport& report) {
  std::string out = "composite,failed_tests";
  for (const auto& [id, frac] : report.atom_false_fraction) out += "," + id;
  out += "\n\"" + report.composite_text + "\"," + format_fraction(report.failed_fraction);
  for (const auto& [id, frac] : report.atom_false_fraction) {
    out += "," + format_fraction(frac);
  }
  out += "\n";
  return out;
}

// Failures-metric table: one row per configuration (input class).
inline std::string render_failures_metric_csv(const RunReport& report) {
  std::set<std::string> atom_ids;
  for (const auto& [cls, per_atom] : report.failures_by_config) {
    for (const auto& [id, f] : per_atom) atom_ids.insert(id);
  }
  std::string out = "configuration";
  for (const auto& id : atom_ids) out += "," + id;
  out += "\n";
  for (const auto& [cls, per_atom] : report.failures_by_config) {
    out += cls;
    for (const auto& id : atom_ids) {
      out += ",";
      auto it = per_atom.find(id);
      if (it != per_atom.end()) out += format_fraction(it->second);
    }
    out += "\n";
  }
  return out;
}

inline std::string render_verdicts_csv(const RunReport& report) {
  std::string out = "group,class,composite,suspects\n";
  for (const auto& v : report.verdicts) {
    out += v.group_id + "," + report.group_class.at(v.group_id) + "," +
           to_string(v.composite_value) + ",\"" + v.suspects.to_string() + "\"\n";
  }
  return out;
}

inline nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["composite"] = report.composite_text;
  j["failed_fraction"] = report.failed_fraction;
  j["atom_false_fraction"] = report.atom_false_fraction;
  j["failures_by_config"] = report.failures_by_config;
  j["failures_by_group"] = report.failures_by_group;
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) {
    nlohmann::json jv;
    jv["group"] = v.group_id;
    jv["class"] = report.group_class.at(v.group_id);
    jv["composite_value"] = to_string(v.composite_value);
    nlohmann::json atom_values = nlohmann::json::object();
    for (const auto& [id, val] : v.atom_values) atom_values[id] = to_string(val);
    jv["atom_values"] = atom_values;
    jv["suspects"] = v.suspects.vertex_ids;
    verdicts.push_back(jv);
  }
  j["verdicts"] = verdicts;
  return j;
}

inline void write_report(const RunReport& report, const std::filesystem::path& out_dir) {
  spit(out_dir / "failed_tests.csv", render_failed_tests_csv(report));
  spit(out_dir / "failures_metric.csv", render_failures_metric_csv(report));
  spit(out_dir / "verdicts.csv", render_verdicts_csv(report));
  spit(out_dir / "summary.json", report_to_json(report).dump(2) + "\n");
}

inline std::string render_report_text(const RunReport& report) {
  std::string out;
  out += "composite: " + report.composite_text + "\n";
  out += "failed tests: " + format_fraction(report.failed_fraction) + "\n";
  out += "atom false fractions:\n";
  for (const auto& [id, f] : report.atom_false_fraction) {
    out += "  " + id + ": " + format_fraction(f) + "\n";
  }
  if (!report.failures_by_config.empty()) {
    out += "failures metric by configuration:\n";
    for (const auto& [cls, per_atom] : report.failures_by_config) {
      out += "  " + cls + ":";
      for (const auto& [id, f] : per_atom) out += " " + id + "=" + format_fraction(f);
      out += "\n";
    }
  }
  for (const auto& v : report.verdicts) {
    if (v.composite_value.is_false()) {
      out += "suspect subsystem for " + v.group_id + ": " + v.suspects.to_string() + "\n";
    }
  }
  return out;
}

}  // namespace metapipe

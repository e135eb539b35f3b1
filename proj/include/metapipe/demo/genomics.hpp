#pragma once

// Desk-scale analogue of a tumor/normal comparative analysis pipeline: a toy
// aligner feeding two germline callers, a somatic caller and a copy-number
// statistics tool, plus the relation suite the derivation consumes and fault
// switches that perturb one component's output on demand.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metapipe/demo/genome.hpp"
#include "metapipe/demo/sequencing.hpp"
#include "metapipe/demo/toolkit.hpp"
#include "metapipe/derive.hpp"
#include "metapipe/executor.hpp"
#include "metapipe/graph.hpp"
#include "metapipe/harness.hpp"

namespace metapipe::demo {

inline constexpr const char* kClassInsertions = "add-insertions";
inline constexpr const char* kClassDeletions = "add-deletions";

inline DomainSet genomics_universe() { return DomainSet{kClassInsertions, kClassDeletions}; }

// ---------------------------------------------------------------------------
// Fault switches. Fault config: {"kind": "...", "edge_window": 4000}.
// drop_edge_calls  - items near the reference edges vanish
// offset_positions - positions shift by +1
// swallow_last_mutation - items at the most recently seen mutation vanish
//                    (the component's view lags one test behind)
// On the aligner, drop/offset hit the tumor path only; swallow hits both.

namespace fault {

inline std::string kind(const nlohmann::json& f) {
  if (!f.is_object() || !f.contains("kind")) return "";
  return f.at("kind").get<std::string>();
}

inline std::size_t edge_window(const nlohmann::json& f) {
  return f.is_object() ? f.value("edge_window", std::size_t{4000}) : std::size_t{4000};
}

// Mutations a lagging component treats as "most recent" at this test index.
inline std::vector<Mutation> stale_newest(const MutationPlan& plan, std::size_t test_index) {
  std::vector<Mutation> out;
  for (const auto& m : plan.mutations) {
    if (static_cast<std::size_t>(m.introduced_at) == test_index) out.push_back(m);
  }
  return out;
}

// The lagging-view fault needs the mutation schedule; the series workdir
// carries a staged copy of the generator's plan (see stage_plan_for_faults).
inline MutationPlan load_staged_plan(const ExecContext& ctx) {
  namespace fs = std::filesystem;
  fs::path plan_path = ctx.series_dir / "plan.json";
  fs::path ref_path = ctx.series_dir / "reference.txt";
  if (!fs::exists(plan_path) || !fs::exists(ref_path)) {
    throw ExecFailure(
        "swallow_last_mutation needs plan.json and reference.txt staged in the series "
        "workdir " + ctx.series_dir.string());
  }
  return plan_from_json(nlohmann::json::parse(slurp(plan_path)), slurp(ref_path));
}

inline bool overlaps(std::size_t lo, std::size_t hi, std::size_t begin, std::size_t end) {
  return lo < end && begin < hi;
}

inline std::vector<Alignment> apply_to_alignments(std::vector<Alignment> alignments,
                                                  const nlohmann::json& f,
                                                  std::size_t ref_len, int read_length,
                                                  const ExecContext& ctx) {
  const std::string k = kind(f);
  if (k.empty()) return alignments;
  std::vector<Alignment> out;
  if (k == "drop_edge_calls") {
    const std::size_t w = edge_window(f);
    for (auto& a : alignments) {
      if (a.pos < w || a.pos >= ref_len - std::min(ref_len, w)) continue;
      out.push_back(std::move(a));
    }
    return out;
  }
  if (k == "offset_positions") {
    for (auto& a : alignments) {
      a.pos += 1;
      if (a.event != 'M') a.anchor += 1;
      out.push_back(std::move(a));
    }
    return out;
  }
  if (k == "swallow_last_mutation") {
    MutationPlan plan = load_staged_plan(ctx);
    auto newest = stale_newest(plan, ctx.test_index);
    for (auto& a : alignments) {
      bool drop = false;
      const std::size_t span = a.ref_span(static_cast<std::size_t>(read_length));
      for (const auto& m : newest) {
        if (overlaps(a.pos, a.pos + span, m.span_begin(), m.span_end())) drop = true;
      }
      if (!drop) out.push_back(std::move(a));
    }
    return out;
  }
  throw ExecFailure("unknown fault kind: " + k);
}

inline std::set<VariantCall> apply_to_calls(std::set<VariantCall> calls,
                                            const nlohmann::json& f, std::size_t ref_len,
                                            const ExecContext& ctx) {
  const std::string k = kind(f);
  if (k.empty()) return calls;
  std::set<VariantCall> out;
  if (k == "drop_edge_calls") {
    const std::size_t w = edge_window(f);
    for (const auto& c : calls) {
      if (c.pos < w || c.pos >= ref_len - std::min(ref_len, w)) continue;
      out.insert(c);
    }
    return out;
  }
  if (k == "offset_positions") {
    for (auto c : calls) {
      c.pos += 1;
      out.insert(std::move(c));
    }
    return out;
  }
  if (k == "swallow_last_mutation") {
    MutationPlan plan = load_staged_plan(ctx);
    auto newest = stale_newest(plan, ctx.test_index);
    for (const auto& c : calls) {
      bool drop = false;
      for (const auto& m : newest) {
        if (c.pos == m.anchor) drop = true;
      }
      if (!drop) out.insert(c);
    }
    return out;
  }
  throw ExecFailure("unknown fault kind: " + k);
}

inline std::vector<PileupRow> apply_to_pileup(std::vector<PileupRow> rows,
                                              const nlohmann::json& f, std::size_t ref_len,
                                              const ExecContext& ctx) {
  const std::string k = kind(f);
  if (k.empty()) return rows;
  std::vector<PileupRow> out;
  if (k == "drop_edge_calls") {
    const std::size_t w = edge_window(f);
    for (auto& r : rows) {
      if (r.pos < w || r.pos >= ref_len - std::min(ref_len, w)) continue;
      out.push_back(r);
    }
    return out;
  }
  if (k == "offset_positions") {
    for (auto& r : rows) {
      r.pos += 1;
      out.push_back(r);
    }
    return out;
  }
  if (k == "swallow_last_mutation") {
    MutationPlan plan = load_staged_plan(ctx);
    auto newest = stale_newest(plan, ctx.test_index);
    for (auto& r : rows) {
      bool drop = false;
      for (const auto& m : newest) {
        if (r.pos >= m.span_begin() && r.pos < m.span_end()) drop = true;
      }
      if (!drop) out.push_back(r);
    }
    return out;
  }
  throw ExecFailure("unknown fault kind: " + k);
}

}  // namespace fault

// ---------------------------------------------------------------------------
// Executors.

inline AlignParams align_params_from(const nlohmann::json& config) {
  AlignParams p;
  if (config.is_object()) {
    p.seed_length = config.value("seed_length", p.seed_length);
    p.max_indel = config.value("max_indel", p.max_indel);
    p.max_mismatch_fraction = config.value("max_mismatch_fraction", p.max_mismatch_fraction);
  }
  return p;
}

inline CallerConfig caller_config_from(const nlohmann::json& config) {
  CallerConfig c;
  if (config.is_object()) {
    c.min_support = config.value("min_support", c.min_support);
    c.min_fraction = config.value("min_fraction", c.min_fraction);
    c.read_length = config.value("read_length", c.read_length);
  }
  return c;
}

inline void register_genomics_executors(ExecutorRegistry& registry) {
  registry.add("genomics.aligner", [](const VertexSpec& vspec) {
    return Executor{[config = vspec.config, fault_cfg = vspec.fault](const ExecContext& ctx) {
                      const std::string reference = ctx.input_text("reference");
                      const AlignParams params = align_params_from(config);
                      const int read_length = config.is_object()
                                                  ? config.value("read_length", 100)
                                                  : 100;
                      auto normal =
                          align_reads(reads_from_text(ctx.input_text("reads_normal")),
                                      reference, params);
                      auto tumor =
                          align_reads(reads_from_text(ctx.input_text("reads_tumor")),
                                      reference, params);
                      const std::string fk = fault::kind(fault_cfg);
                      if (fk == "swallow_last_mutation") {
                        normal = fault::apply_to_alignments(std::move(normal), fault_cfg,
                                                            reference.size(), read_length, ctx);
                        tumor = fault::apply_to_alignments(std::move(tumor), fault_cfg,
                                                           reference.size(), read_length, ctx);
                      } else if (!fk.empty()) {
                        // A bug in the second-sample path: only tumor output affected.
                        tumor = fault::apply_to_alignments(std::move(tumor), fault_cfg,
                                                           reference.size(), read_length, ctx);
                      }
                      ctx.write_output("aln_normal", alignments_to_text(normal));
                      ctx.write_output("aln_tumor", alignments_to_text(tumor));
                    },
                    nullptr};
  });

  registry.add("genomics.germline_caller", [](const VertexSpec& vspec) {
    return Executor{[config = vspec.config, fault_cfg = vspec.fault](const ExecContext& ctx) {
                      const std::string reference = ctx.input_text("reference");
                      auto alignments = alignments_from_text(ctx.input_text("aln"));
                      auto calls =
                          call_indels(alignments, reference, caller_config_from(config));
                      calls = fault::apply_to_calls(std::move(calls), fault_cfg,
                                                    reference.size(), ctx);
                      ctx.write_output("calls", calls_to_text(calls));
                    },
                    nullptr};
  });

  registry.add("genomics.somatic_caller", [](const VertexSpec& vspec) {
    return Executor{[config = vspec.config, fault_cfg = vspec.fault](const ExecContext& ctx) {
                      const std::string reference = ctx.input_text("reference");
                      auto normal = alignments_from_text(ctx.input_text("aln_normal"));
                      auto tumor = alignments_from_text(ctx.input_text("aln_tumor"));
                      auto calls =
                          call_somatic(normal, tumor, reference, caller_config_from(config));
                      calls = fault::apply_to_calls(std::move(calls), fault_cfg,
                                                    reference.size(), ctx);
                      ctx.write_output("calls", calls_to_text(calls));
                    },
                    nullptr};
  });

  registry.add("genomics.copynumber_stats", [](const VertexSpec& vspec) {
    return Executor{[config = vspec.config, fault_cfg = vspec.fault](const ExecContext& ctx) {
                      const std::string reference = ctx.input_text("reference");
                      const int read_length = config.is_object()
                                                  ? config.value("read_length", 100)
                                                  : 100;
                      auto normal = alignments_from_text(ctx.input_text("aln_normal"));
                      auto tumor = alignments_from_text(ctx.input_text("aln_tumor"));
                      Pileup pileup =
                          make_pileup(normal, tumor, reference.size(), read_length);
                      std::string text = pileup_to_text(pileup);
                      if (!fault::kind(fault_cfg).empty()) {
                        auto rows = pileup_rows_from_text(text);
                        rows = fault::apply_to_pileup(std::move(rows), fault_cfg,
                                                      reference.size(), ctx);
                        text.clear();
                        for (const auto& r : rows) {
                          text += std::to_string(r.pos) + "\t" + std::to_string(r.normal) +
                                  "\t" + std::to_string(r.tumor) + "\t" +
                                  (r.ratio ? format_fraction(*r.ratio) : std::string(".")) +
                                  "\n";
                        }
                      }
                      ctx.write_output("pileup", text);
                    },
                    nullptr};
  });
}

// ---------------------------------------------------------------------------
// Graph.

struct GenomicsFault {
  std::string vertex;  // empty = no fault
  std::string kind;
  std::size_t edge_window = 4000;
};

inline void validate_fault(const GenomicsFault& fault, const std::set<std::string>& vertices) {
  if (fault.kind.empty() && fault.vertex.empty()) return;
  if (fault.kind != "drop_edge_calls" && fault.kind != "offset_positions" &&
      fault.kind != "swallow_last_mutation") {
    throw UsageError("unknown fault kind: " + fault.kind);
  }
  if (!vertices.count(fault.vertex)) {
    throw UsageError("fault targets unknown vertex: " + fault.vertex);
  }
}

inline PipelineGraph genomics_graph(const CallerConfig& caller_cfg = {},
                                    const GenomicsFault& fault = {}) {
  validate_fault(fault, {"bwa", "strelka-somatic", "strelka-germline-tumor",
                         "strelka-germline-normal", "sequenza-utils"});
  nlohmann::json caller_json = {{"min_support", caller_cfg.min_support},
                                {"min_fraction", caller_cfg.min_fraction},
                                {"read_length", caller_cfg.read_length}};
  nlohmann::json align_json = {{"seed_length", 16},
                               {"max_indel", 50},
                               {"max_mismatch_fraction", 0.10},
                               {"read_length", caller_cfg.read_length}};
  nlohmann::json stats_json = {{"read_length", caller_cfg.read_length}};

  auto fault_for = [&](const std::string& vertex) -> nlohmann::json {
    if (fault.vertex != vertex || fault.kind.empty()) return nlohmann::json();
    return nlohmann::json{{"kind", fault.kind}, {"edge_window", fault.edge_window}};
  };

  PipelineGraph g;
  VertexSpec bwa;
  bwa.id = "bwa";
  bwa.inputs = {"reads_normal", "reads_tumor", "reference"};
  bwa.outputs = {"aln_normal", "aln_tumor"};
  bwa.executor = "builtin:genomics.aligner";
  bwa.config = align_json;
  bwa.fault = fault_for("bwa");
  g.add_vertex(bwa);

  VertexSpec somatic;
  somatic.id = "strelka-somatic";
  somatic.inputs = {"aln_normal", "aln_tumor", "reference"};
  somatic.outputs = {"calls"};
  somatic.executor = "builtin:genomics.somatic_caller";
  somatic.config = caller_json;
  somatic.fault = fault_for("strelka-somatic");
  g.add_vertex(somatic);

  VertexSpec gt;
  gt.id = "strelka-germline-tumor";
  gt.inputs = {"aln", "reference"};
  gt.outputs = {"calls"};
  gt.executor = "builtin:genomics.germline_caller";
  gt.config = caller_json;
  gt.fault = fault_for("strelka-germline-tumor");
  g.add_vertex(gt);

  VertexSpec gn;
  gn.id = "strelka-germline-normal";
  gn.inputs = {"aln", "reference"};
  gn.outputs = {"calls"};
  gn.executor = "builtin:genomics.germline_caller";
  gn.config = caller_json;
  gn.fault = fault_for("strelka-germline-normal");
  g.add_vertex(gn);

  VertexSpec su;
  su.id = "sequenza-utils";
  su.inputs = {"aln_normal", "aln_tumor", "reference"};
  su.outputs = {"pileup"};
  su.executor = "builtin:genomics.copynumber_stats";
  su.config = stats_json;
  su.fault = fault_for("sequenza-utils");
  g.add_vertex(su);

  g.add_edge("bwa.aln_normal -> strelka-somatic.aln_normal");
  g.add_edge("bwa.aln_tumor -> strelka-somatic.aln_tumor");
  g.add_edge("bwa.aln_tumor -> strelka-germline-tumor.aln");
  g.add_edge("bwa.aln_normal -> strelka-germline-normal.aln");
  g.add_edge("bwa.aln_normal -> sequenza-utils.aln_normal");
  g.add_edge("bwa.aln_tumor -> sequenza-utils.aln_tumor");
  g.add_system_input("reads_normal", {PortRef{"bwa", "reads_normal"}});
  g.add_system_input("reads_tumor", {PortRef{"bwa", "reads_tumor"}});
  g.add_system_input("reference",
                     {PortRef{"bwa", "reference"}, PortRef{"strelka-somatic", "reference"},
                      PortRef{"strelka-germline-tumor", "reference"},
                      PortRef{"strelka-germline-normal", "reference"},
                      PortRef{"sequenza-utils", "reference"}});
  g.add_system_output(PortRef{"strelka-somatic", "calls"});
  g.add_system_output(PortRef{"strelka-germline-tumor", "calls"});
  g.add_system_output(PortRef{"strelka-germline-normal", "calls"});
  g.add_system_output(PortRef{"sequenza-utils", "pileup"});
  return g;
}

// ---------------------------------------------------------------------------
// Relation suite.

namespace verdicts {

inline std::optional<std::vector<std::set<VariantCall>>> call_series(
    const ExecutionTrace& trace, const std::string& vertex, std::size_t n) {
  std::vector<std::set<VariantCall>> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto text = trace.output_text(vertex, "calls", k);
    if (!text) return std::nullopt;
    out.push_back(calls_from_text(*text));
  }
  return out;
}

inline TriValue subset_verdict(const std::vector<std::set<VariantCall>>& series) {
  for (std::size_t j = 0; j + 1 < series.size(); ++j) {
    if (!std::includes(series[j + 1].begin(), series[j + 1].end(), series[j].begin(),
                       series[j].end())) {
      return TriValue::make_false();
    }
  }
  return TriValue::make_true();
}

inline std::vector<bool> subset_flags(const std::vector<std::set<VariantCall>>& series) {
  std::vector<bool> flags;
  for (std::size_t j = 0; j + 1 < series.size(); ++j) {
    flags.push_back(!std::includes(series[j + 1].begin(), series[j + 1].end(),
                                   series[j].begin(), series[j].end()));
  }
  return flags;
}

// Elevated depth-ratio positions, eroded by `radius` so segment boundaries
// (where partially overlapping reads blur the ratio) never flap between
// tests. 50k-position scans, so prefix sums.
inline std::vector<bool> eroded_elevated(const std::vector<PileupRow>& rows, std::size_t L,
                                         double threshold, std::size_t radius) {
  std::vector<int> elevated(L, 0);
  for (const auto& r : rows) {
    if (r.pos < L && r.ratio && *r.ratio >= threshold) elevated[r.pos] = 1;
  }
  std::vector<int> prefix(L + 1, 0);
  for (std::size_t i = 0; i < L; ++i) prefix[i + 1] = prefix[i] + elevated[i];
  std::vector<bool> out(L, false);
  for (std::size_t p = 0; p < L; ++p) {
    std::size_t lo = p > radius ? p - radius : 0;
    std::size_t hi = std::min(L, p + radius + 1);
    out[p] = prefix[hi] - prefix[lo] == static_cast<int>(hi - lo);
  }
  return out;
}

struct SuObservation {
  bool covers_reference = false;
  // Hysteresis pair: a position confidently elevated in one test must still
  // be loosely elevated in the next, so coverage jitter at a duplication's
  // boundary ramp cannot flap the persistence check.
  std::vector<bool> elevated_strict;
  std::vector<bool> elevated_loose;
};

inline std::optional<SuObservation> su_observe(const ExecutionTrace& trace, std::size_t k,
                                               double threshold, std::size_t radius) {
  auto text = trace.output_text("sequenza-utils", "pileup", k);
  auto ref = trace.input_text("sequenza-utils", "reference", k);
  if (!text || !ref) return std::nullopt;
  const std::size_t L = ref->size();
  auto rows = pileup_rows_from_text(*text);
  std::vector<bool> present(L, false);
  for (const auto& r : rows) {
    if (r.pos < L) present[r.pos] = true;
  }
  SuObservation obs;
  obs.covers_reference = std::all_of(present.begin(), present.end(), [](bool b) { return b; });
  obs.elevated_strict = eroded_elevated(rows, L, threshold + 0.1, radius);
  obs.elevated_loose = eroded_elevated(rows, L, threshold - 0.1, radius);
  return obs;
}

inline bool su_persists(const SuObservation& cur, const SuObservation& next) {
  for (std::size_t p = 0; p < cur.elevated_strict.size(); ++p) {
    if (cur.elevated_strict[p] && !next.elevated_loose[p]) return false;
  }
  return true;
}

}  // namespace verdicts

// Aligner relation: mapped reads must yield non-empty outputs on every test.
inline RelationAtom make_aligner_atom(const std::string& vertex = "bwa",
                                      std::vector<std::string> ports = {"aln_normal",
                                                                        "aln_tumor"}) {
  RelationAtom a;
  a.id = "BWA";
  a.vertex = vertex;
  a.domain = genomics_universe();
  a.verdict = [vertex, ports](const TestGroup& group, const ExecutionTrace& trace) {
    for (std::size_t k = 0; k < group.size(); ++k) {
      for (const auto& port : ports) {
        auto text = trace.output_text(vertex, port, k);
        if (!text) return TriValue::not_computed();
        if (trim(*text).empty()) return TriValue::make_false();
      }
    }
    return TriValue::make_true();
  };
  return a;
}

// Caller relation: every call made on one input recurs on the next.
inline RelationAtom make_subset_atom(const std::string& id, const std::string& vertex,
                                     DomainSet domain) {
  RelationAtom a;
  a.id = id;
  a.vertex = vertex;
  a.domain = std::move(domain);
  a.verdict = [vertex](const TestGroup& group, const ExecutionTrace& trace) {
    auto series = verdicts::call_series(trace, vertex, group.size());
    if (!series) return TriValue::not_computed();
    return verdicts::subset_verdict(*series);
  };
  a.pair_flags = [vertex](const TestGroup& group, const ExecutionTrace& trace)
      -> std::optional<std::vector<bool>> {
    auto series = verdicts::call_series(trace, vertex, group.size());
    if (!series) return std::nullopt;
    return verdicts::subset_flags(*series);
  };
  return a;
}

// Copy-number statistics reflect the changes: the pileup covers the whole
// reference, and once a duplication elevates depth_ratio the elevation
// persists in every later test.
inline RelationAtom make_copynumber_atom(double threshold = 1.5, std::size_t radius = 100) {
  RelationAtom a;
  a.id = "SU";
  a.vertex = "sequenza-utils";
  a.domain = genomics_universe();
  a.verdict = [threshold, radius](const TestGroup& group, const ExecutionTrace& trace) {
    std::vector<verdicts::SuObservation> obs;
    for (std::size_t k = 0; k < group.size(); ++k) {
      auto o = verdicts::su_observe(trace, k, threshold, radius);
      if (!o) return TriValue::not_computed();
      if (!o->covers_reference) return TriValue::make_false();
      obs.push_back(std::move(*o));
    }
    for (std::size_t j = 0; j + 1 < obs.size(); ++j) {
      if (!verdicts::su_persists(obs[j], obs[j + 1])) return TriValue::make_false();
    }
    return TriValue::make_true();
  };
  a.pair_flags = [threshold, radius](const TestGroup& group, const ExecutionTrace& trace)
      -> std::optional<std::vector<bool>> {
    std::vector<verdicts::SuObservation> obs;
    for (std::size_t k = 0; k < group.size(); ++k) {
      auto o = verdicts::su_observe(trace, k, threshold, radius);
      if (!o) return std::nullopt;
      obs.push_back(std::move(*o));
    }
    std::vector<bool> flags;
    for (std::size_t j = 0; j + 1 < obs.size(); ++j) {
      flags.push_back(!obs[j].covers_reference || !obs[j + 1].covers_reference ||
                      !verdicts::su_persists(obs[j], obs[j + 1]));
    }
    return flags;
  };
  return a;
}

// Germline and somatic are mutually exclusive: per adjacent pair, the new
// tumor germline calls equal the new normal germline calls xor the new
// somatic calls (set symmetric difference).
inline RelationAtom make_lineage_exclusive_atom() {
  RelationAtom a;
  a.id = "Add";
  a.vertex = kCrossVertex;
  a.reads = {"strelka-germline-normal", "strelka-germline-tumor", "strelka-somatic"};
  a.domain = genomics_universe();
  auto deltas = [](const TestGroup& group, const ExecutionTrace& trace)
      -> std::optional<std::vector<bool>> {
    auto gt = verdicts::call_series(trace, "strelka-germline-tumor", group.size());
    auto gn = verdicts::call_series(trace, "strelka-germline-normal", group.size());
    auto s = verdicts::call_series(trace, "strelka-somatic", group.size());
    if (!gt || !gn || !s) return std::nullopt;
    std::vector<bool> mismatches;
    for (std::size_t j = 0; j + 1 < group.size(); ++j) {
      auto delta = [&](const std::vector<std::set<VariantCall>>& v) {
        std::set<VariantCall> d;
        std::set_difference(v[j + 1].begin(), v[j + 1].end(), v[j].begin(), v[j].end(),
                            std::inserter(d, d.end()));
        return d;
      };
      std::set<VariantCall> dgt = delta(*gt), dgn = delta(*gn), ds = delta(*s);
      std::set<VariantCall> expected;
      std::set_symmetric_difference(dgn.begin(), dgn.end(), ds.begin(), ds.end(),
                                    std::inserter(expected, expected.end()));
      mismatches.push_back(dgt != expected);
    }
    return mismatches;
  };
  a.verdict = [deltas](const TestGroup& group, const ExecutionTrace& trace) {
    auto flags = deltas(group, trace);
    if (!flags) return TriValue::not_computed();
    for (bool f : *flags) {
      if (f) return TriValue::make_false();
    }
    return TriValue::make_true();
  };
  a.pair_flags = deltas;
  return a;
}

// Registers the relation atoms of the demo suite and returns the per-vertex
// relation sets (the cross-vertex consistency condition rides along in its
// own pseudo-set).
inline std::vector<RelationSet> genomics_relation_suite(AtomRegistry& atoms,
                                                        int read_length = 100) {
  const DomainSet ins{kClassInsertions};
  const DomainSet del{kClassDeletions};

  atoms.add(make_aligner_atom());
  atoms.add(make_subset_atom("S_i", "strelka-somatic", ins));
  atoms.add(make_subset_atom("S_d", "strelka-somatic", del));
  atoms.add(make_subset_atom("GT_i", "strelka-germline-tumor", ins));
  atoms.add(make_subset_atom("GT_d", "strelka-germline-tumor", del));
  atoms.add(make_subset_atom("GN_i", "strelka-germline-normal", ins));
  atoms.add(make_subset_atom("GN_d", "strelka-germline-normal", del));
  atoms.add(make_copynumber_atom(1.5, static_cast<std::size_t>(read_length)));
  atoms.add(make_lineage_exclusive_atom());

  return {{"bwa", {RelationExpr::atom("BWA")}},
          {"strelka-somatic", {RelationExpr::atom("S_i"), RelationExpr::atom("S_d")}},
          {"strelka-germline-tumor", {RelationExpr::atom("GT_i"), RelationExpr::atom("GT_d")}},
          {"strelka-germline-normal", {RelationExpr::atom("GN_i"), RelationExpr::atom("GN_d")}},
          {"sequenza-utils", {RelationExpr::atom("SU")}},
          {kCrossVertex, {RelationExpr::atom("Add")}}};
}

// The composite relations of the worked derivation, by configuration kind.
inline RelationExpr genomics_composite(MutationSeriesKind kind) {
  const bool ins = kind == MutationSeriesKind::Insertions;
  auto A = [](const char* id) { return RelationExpr::atom(id); };
  RelationExpr callers = RelationExpr::and_(
      RelationExpr::and_(RelationExpr::and_(A(ins ? "S_i" : "S_d"),
                                            A(ins ? "GT_i" : "GT_d")),
                         A(ins ? "GN_i" : "GN_d")),
      A("SU"));
  return RelationExpr::and_(RelationExpr::and_(A("BWA"), callers), A("Add"));
}

// ---------------------------------------------------------------------------
// Test-series generation: reference + plan + per-test read files on disk.

struct GeneratedSeries {
  MutationPlan plan;
  TestGroup group;
};

// Copies the generator's plan and reference into the series workdir, where
// the lagging-view fault switch expects to find them.
inline void stage_plan_for_faults(const std::filesystem::path& input_dir,
                                  const std::filesystem::path& series_workdir) {
  namespace fs = std::filesystem;
  fs::create_directories(series_workdir);
  for (const char* name : {"plan.json", "reference.txt"}) {
    if (fs::exists(input_dir / name)) {
      fs::copy_file(input_dir / name, series_workdir / name,
                    fs::copy_options::overwrite_existing);
    }
  }
}

inline GeneratedSeries generate_genomics_series(const GeneratorConfig& config,
                                                const std::string& group_id,
                                                const std::filesystem::path& dir) {
  GeneratedSeries out;
  out.plan = make_plan(config);
  std::filesystem::create_directories(dir);
  spit(dir / "reference.txt", out.plan.reference);
  spit(dir / "plan.json", plan_to_json(out.plan).dump(2) + "\n");

  out.group.id = group_id;
  out.group.class_tag = config.mutation_kind == MutationSeriesKind::Insertions
                            ? kClassInsertions
                            : kClassDeletions;
  out.group.metadata["seed"] = std::to_string(config.seed);
  out.group.metadata["noise_rate"] = format_fraction(config.noise_rate);
  out.group.metadata["coverage_depth"] = format_fraction(config.coverage_depth);

  for (int test = 1; test <= config.series_length; ++test) {
    std::map<std::string, std::string> bundle;
    bundle["reference"] = (dir / "reference.txt").string();
    for (bool tumor : {false, true}) {
      std::string genome = genome_at_test(out.plan, test, tumor);
      std::mt19937_64 rng(mix_seed(out.plan.effective_seed,
                                   0x52454144ull + 2 * static_cast<std::uint64_t>(test) +
                                       (tumor ? 1 : 0)));
      auto reads = simulate_reads(genome, config.read_length, config.coverage_depth,
                                  config.noise_rate, rng);
      std::string name = std::string("reads_") + (tumor ? "tumor" : "normal") + "_" +
                         std::to_string(test) + ".txt";
      spit(dir / name, reads_to_text(reads));
      bundle[tumor ? "reads_tumor" : "reads_normal"] = (dir / name).string();
    }
    out.group.inputs.push_back(std::move(bundle));
  }
  return out;
}

}  // namespace metapipe::demo

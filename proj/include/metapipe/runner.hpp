#pragma once

// Orchestration shared by the command-line tool and the test suites: derive
// composites from a parsed spec, materialize and run its test groups, and
// assemble the reports.

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "metapipe/demo/genomics.hpp"
#include "metapipe/harness.hpp"
#include "metapipe/spec_file.hpp"

namespace metapipe {

// Exit-code contract: 0 pass, 1 relation failure detected, 2 configuration
// error, 3 derivation exhausted (no candidate with a non-empty domain).
enum ExitCode : int {
  kExitPass = 0,
  kExitRelationFailure = 1,
  kExitConfigError = 2,
  kExitDerivationExhausted = 3,
};

inline nlohmann::json derivation_to_json(const DeriveResult& result) {
  nlohmann::json j;
  j["selections_total"] = result.selections_total;
  j["selections_tried"] = result.selections_tried;
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : result.candidates) {
    nlohmann::json jc;
    jc["expression"] = to_text(c.expr);
    jc["canonical"] = canonical_text(c.expr);
    jc["domain"] = c.domain.classes();
    nlohmann::json prov = nlohmann::json::array();
    for (const auto& p : c.provenance) {
      prov.push_back({{"step", p.step}, {"note", p.note}});
    }
    jc["provenance"] = prov;
    candidates.push_back(jc);
  }
  j["candidates"] = candidates;
  j["exhausted_notes"] = result.exhausted_notes;
  return j;
}

inline DeriveResult derive_from_spec(ParsedSpec& spec, std::size_t selection_cap = 256) {
  return derive(spec.graph, spec.sets, spec.policy, selection_cap, spec.classes, spec.atoms);
}

// Resolves the composite to execute: a candidate index into the derivation
// output, or a pasted expression.
inline CompositeCandidate resolve_composite(const std::string& text, ParsedSpec& spec,
                                            const DeriveResult& derived) {
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    std::size_t index = std::stoull(text);
    if (index >= derived.candidates.size()) {
      throw ConfigError("composite index " + text + " out of range; derivation produced " +
                        std::to_string(derived.candidates.size()) + " candidates");
    }
    return derived.candidates[index];
  }
  CompositeCandidate cand;
  cand.expr = parse_expr_text(text);
  for (const auto& id : atoms_of(cand.expr)) {
    if (!spec.atoms.contains(id)) {
      throw ConfigError("composite references unknown atom '" + id + "'");
    }
  }
  cand.domain = domain_of(cand.expr, spec.classes, spec.atoms);
  if (cand.domain.empty()) throw ConfigError("composite has an empty domain");
  return cand;
}

struct RunConfig {
  std::filesystem::path workdir;
  std::filesystem::path out_dir;  // defaults to workdir/report
  int parallel = 1;
  std::optional<std::uint64_t> seed_override;
};

struct RunOutcome {
  RunReport report;
  int exit_code = kExitPass;
  std::vector<std::string> notes;
};

inline RunOutcome run_spec(ParsedSpec& spec, const CompositeCandidate& composite,
                           const GeneratorRegistry& generators,
                           const ExecutorRegistry& executors, const RunConfig& config) {
  namespace fs = std::filesystem;
  RunOutcome outcome;

  // Materialize groups, filtering to the composite's domain.
  std::vector<TestGroup> groups;
  std::size_t group_index = 0;
  for (const auto& gspec : spec.groups) {
    ++group_index;
    if (!composite.domain.contains(gspec.class_tag)) {
      outcome.notes.push_back("group '" + gspec.id + "' (class " + gspec.class_tag +
                              ") lies outside the composite domain; skipped");
      continue;
    }
    GroupSpec staged = gspec;
    if (config.seed_override && staged.generator.is_object()) {
      staged.generator["seed"] = *config.seed_override + group_index - 1;
    }
    groups.push_back(
        materialize_group(staged, generators, config.workdir / "inputs" / gspec.id));
  }
  if (groups.empty()) {
    throw ConfigError("no applicable test groups: every declared group lies outside the "
                      "composite's domain " + composite.domain.to_string());
  }

  // Run the series, one workdir per group; groups may run concurrently.
  std::vector<ExecutionTrace> traces(groups.size());
  std::vector<std::string> failures(groups.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(config.parallel,
                                                static_cast<int>(groups.size())));
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= groups.size()) return;
      try {
        fs::path series_dir = config.workdir / "runs" / groups[i].id;
        demo::stage_plan_for_faults(config.workdir / "inputs" / groups[i].id, series_dir);
        traces[i] = run_series(spec.graph, groups[i], series_dir, executors);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!failures[i].empty()) {
      throw ConfigError("group '" + groups[i].id + "' failed to run: " + failures[i]);
    }
  }

  std::vector<std::pair<TestGroup, ExecutionTrace>> runs;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    runs.emplace_back(groups[i], std::move(traces[i]));
  }
  outcome.report = build_report(composite, runs, spec.graph, spec.atoms);

  fs::path out = config.out_dir.empty() ? config.workdir / "report" : config.out_dir;
  write_report(outcome.report, out);

  bool any_false = false, any_undef = false;
  for (const auto& v : outcome.report.verdicts) {
    any_false |= v.composite_value.is_false();
    any_undef |= v.composite_value.is_undef();
  }
  if (any_undef) {
    outcome.notes.push_back("some verdicts are undefined; see the report for causes");
  }
  outcome.exit_code = any_false ? kExitRelationFailure : kExitPass;
  return outcome;
}

}  // namespace metapipe

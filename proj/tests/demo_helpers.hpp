#pragma once

// Shared machinery for demo-level and acceptance tests: run one generated
// genomics series through the pipeline and evaluate the worked composite.

#include <filesystem>
#include <string>

#include "metapipe/demo/genomics.hpp"
#include "metapipe/harness.hpp"

namespace demo_helpers {

using namespace metapipe;

struct GenomicsRun {
  PipelineGraph graph;
  AtomRegistry atoms;
  std::vector<RelationSet> sets;
  demo::GeneratedSeries series;
  ExecutionTrace trace;

  CompositeCandidate composite() const {
    CompositeCandidate c;
    c.expr = demo::genomics_composite(kind);
    c.domain = domain_of(c.expr, demo::genomics_universe(), atoms);
    return c;
  }

  Verdict verdict() const {
    return evaluate(composite(), series.group, trace, graph, atoms);
  }

  demo::MutationSeriesKind kind = demo::MutationSeriesKind::Insertions;
};

inline GenomicsRun run_genomics(const demo::GeneratorConfig& config,
                                const demo::GenomicsFault& fault,
                                const std::filesystem::path& dir,
                                const std::string& group_id = "series") {
  GenomicsRun run;
  run.kind = config.mutation_kind;
  demo::CallerConfig caller;
  caller.read_length = config.read_length;
  run.graph = demo::genomics_graph(caller, fault);
  run.sets = demo::genomics_relation_suite(run.atoms, config.read_length);
  run.series = demo::generate_genomics_series(config, group_id, dir / "inputs");
  demo::stage_plan_for_faults(dir / "inputs", dir / "run");
  ExecutorRegistry registry;
  demo::register_genomics_executors(registry);
  run.trace = run_series(run.graph, run.series.group, dir / "run", registry);
  return run;
}

}  // namespace demo_helpers

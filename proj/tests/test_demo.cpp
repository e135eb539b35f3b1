#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "demo_helpers.hpp"
#include "genome_diff_oracle.hpp"
#include "metapipe/demo/detector.hpp"
#include "metapipe/demo/genomics.hpp"

using namespace metapipe;
using namespace metapipe::demo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "metapipe-demo-tests" /
                 (tag + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GeneratorConfig small_config(std::uint64_t seed,
                             MutationSeriesKind kind = MutationSeriesKind::Insertions) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.mutation_kind = kind;
  return cfg;
}

}  // namespace

TEST_CASE("plan generation: reproducible, kind-restricted, disjoint") {
  auto p1 = make_plan(small_config(3));
  auto p2 = make_plan(small_config(3));
  CHECK(plan_to_json(p1) == plan_to_json(p2));
  CHECK(p1.reference == p2.reference);
  REQUIRE_FALSE(p1.mutations.empty());

  for (const auto& m : p1.mutations) {
    CHECK(m.kind != MutationKind::MicroDeletion);  // insertion series
    CHECK(m.introduced_at >= 1);
    CHECK(m.introduced_at <= p1.series_length);
  }
  auto deletions = make_plan(small_config(3, MutationSeriesKind::Deletions));
  for (const auto& m : deletions.mutations) {
    CHECK(m.kind != MutationKind::MicroInsertion);
  }

  // Segments pairwise disjoint and ordered.
  for (std::size_t i = 0; i + 1 < p1.segments.size(); ++i) {
    CHECK(p1.segments[i].end <= p1.segments[i + 1].begin);
  }

  // Zero sampled mutations: retries, then reports.
  GeneratorConfig none = small_config(1);
  none.indel_probability = 0.0;
  none.copynumber_probability = 0.0;
  none.max_seed_retries = 2;
  CHECK_THROWS_AS(make_plan(none), ConfigError);
}

TEST_CASE("plan round-trips through its configuration file") {
  auto plan = make_plan(small_config(11));
  auto restored = plan_from_json(plan_to_json(plan), plan.reference);
  CHECK(plan_to_json(restored) == plan_to_json(plan));
  CHECK(true_calls(restored, 9, true) == true_calls(plan, 9, true));
}

TEST_CASE("ground truth: cumulative, subset-monotone, exclusive lineages") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    for (auto kind : {MutationSeriesKind::Insertions, MutationSeriesKind::Deletions}) {
      auto plan = make_plan(small_config(seed, kind));
      for (bool tumor : {false, true}) {
        std::set<VariantCall> prev;
        for (int test = 1; test <= plan.series_length; ++test) {
          auto cur = true_calls(plan, test, tumor);
          CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
          prev = std::move(cur);
        }
      }
      // germline(tumor) = germline(normal) xor somatic, exactly.
      for (int test = 1; test <= plan.series_length; ++test) {
        auto gt = true_calls(plan, test, true);
        auto gn = true_calls(plan, test, false);
        std::set<VariantCall> somatic;
        for (const auto& m : visible_mutations(plan, test, true)) {
          if (m.lineage != Lineage::Somatic || m.kind == MutationKind::Duplication) continue;
          auto one = true_calls(MutationPlan{plan.reference, {}, {m}, plan.series_length},
                                plan.series_length, true);
          somatic.insert(one.begin(), one.end());
        }
        std::set<VariantCall> expected;
        std::set_symmetric_difference(gn.begin(), gn.end(), somatic.begin(), somatic.end(),
                                      std::inserter(expected, expected.end()));
        CHECK(gt == expected);
      }
    }
  }
}

TEST_CASE("diff oracle agrees with the plan-derived ground truth") {
  for (std::uint64_t seed : {2, 9}) {
    for (auto kind : {MutationSeriesKind::Insertions, MutationSeriesKind::Deletions}) {
      GeneratorConfig cfg = small_config(seed, kind);
      cfg.copynumber_probability = 0.25;  // exercise the copy-number skip path
      auto plan = make_plan(cfg);
      for (int test : {1, 5, 9}) {
        for (bool tumor : {false, true}) {
          std::string genome = genome_at_test(plan, test, tumor);
          CHECK(oracle::diff_calls(genome, plan.reference) == true_calls(plan, test, tumor));
        }
      }
    }
  }
}

TEST_CASE("toy aligner: exact, unmappable and indel-spanning reads") {
  auto plan = make_plan(small_config(4));
  const std::string& ref = plan.reference;

  // A read copied verbatim from position 100 lands at 100.
  std::vector<Read> reads{{"verbatim", ref.substr(100, 100)}};
  auto alns = align_reads(reads, ref);
  REQUIRE(alns.size() == 1);
  CHECK(alns[0].pos == 100);
  CHECK(alns[0].event == 'M');
  CHECK(alns[0].mismatches == 0);

  // Random reads over a random reference are mostly dropped. Brute-force
  // scan confirms the dropped ones have no exact placement.
  std::mt19937_64 rng(77);
  int dropped = 0;
  for (int i = 0; i < 20; ++i) {
    std::string junk;
    for (int b = 0; b < 100; ++b) junk += "ACGT"[rng() % 4];
    auto placed = align_reads({{"junk", junk}}, ref);
    if (placed.empty()) {
      ++dropped;
      CHECK(ref.find(junk) == std::string::npos);
    }
  }
  CHECK(dropped >= 18);

  // A read spanning an insertion carries the exact evidence.
  const Mutation* ins = nullptr;
  for (const auto& m : plan.mutations) {
    if (m.kind == MutationKind::MicroInsertion && m.payload.size() <= 30) ins = &m;
  }
  REQUIRE(ins != nullptr);
  std::string genome = apply_mutations(ref, {*ins});
  // The genome coordinate of the anchor equals the reference one (single event).
  std::string spanning = genome.substr(ins->anchor - 40, 100);
  auto evidence = align_reads({{"span", spanning}}, ref);
  REQUIRE(evidence.size() == 1);
  CHECK(evidence[0].event == 'I');
  CHECK(evidence[0].anchor == ins->anchor);
  CHECK(evidence[0].inserted == ins->payload);
}

TEST_CASE("callers: single insertion, identical samples, depth ratio") {
  auto plan = make_plan(small_config(6));
  const std::string& ref = plan.reference;

  const Mutation* ins = nullptr;
  for (const auto& m : plan.mutations) {
    if (m.kind == MutationKind::MicroInsertion && m.payload.size() == 5) ins = &m;
  }
  if (!ins) {
    for (const auto& m : plan.mutations) {
      if (m.kind == MutationKind::MicroInsertion) ins = &m;
    }
  }
  REQUIRE(ins != nullptr);

  std::string genome = apply_mutations(ref, {*ins});
  std::mt19937_64 rng(5);
  auto reads = simulate_reads(genome, 100, 30.0, 0.0, rng);
  auto alns = align_reads(reads, ref);
  auto calls = call_indels(alns, ref, CallerConfig{});
  REQUIRE(calls.size() == 1);
  CHECK(calls.begin()->pos == ins->anchor);
  CHECK(calls.begin()->alt == ref.substr(ins->anchor, 1) + ins->payload);

  // Identical normal and tumor: no somatic calls.
  CHECK(call_somatic(alns, alns, ref, CallerConfig{}).empty());

  // A somatic duplication doubles tumor depth inside the segment only.
  Mutation dup;
  dup.kind = MutationKind::Duplication;
  dup.length = 6000;
  dup.anchor = 20000 + dup.length - 1;
  dup.payload = ref.substr(20000, dup.length);
  dup.lineage = Lineage::Somatic;
  dup.introduced_at = 1;
  std::string tumor_genome = apply_mutations(ref, {dup});
  std::mt19937_64 rn(8), rt(9);
  auto aln_n = align_reads(simulate_reads(ref, 100, 50.0, 0.0, rn), ref);
  auto aln_t = align_reads(simulate_reads(tumor_genome, 100, 50.0, 0.0, rt), ref);
  auto pileup = make_pileup(aln_n, aln_t, ref.size(), 100);

  auto mean_ratio = [&](std::size_t lo, std::size_t hi) {
    double sum = 0;
    int count = 0;
    for (std::size_t p = lo; p < hi; ++p) {
      if (auto r = pileup.depth_ratio(p)) {
        sum += *r;
        ++count;
      }
    }
    REQUIRE(count > 0);
    return sum / count;
  };
  CHECK(mean_ratio(20300, 25700) == Catch::Approx(2.0).margin(0.4));   // within +-20%
  CHECK(mean_ratio(30000, 34000) == Catch::Approx(1.0).margin(0.2));
  // No indel calls out of a duplication junction.
  auto dup_calls = call_indels(aln_t, ref, CallerConfig{});
  CHECK(dup_calls.empty());
}

TEST_CASE("external reference files can replace the synthetic genome") {
  auto dir = fresh_dir("extref");
  std::mt19937_64 rng(99);
  std::string bases;
  for (int i = 0; i < 12000; ++i) bases += "ACGT"[rng() % 4];
  // lowercase and separators must be tolerated
  std::string noisy = bases.substr(0, 6000) + "\n" + bases.substr(6000);
  for (std::size_t i = 0; i < noisy.size(); i += 7) {
    noisy[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(noisy[i])));
  }
  spit(dir / "genome.txt", noisy);

  GeneratorConfig cfg = small_config(2);
  cfg.reference_path = (dir / "genome.txt").string();
  cfg.min_dup_size = 2000;
  cfg.max_dup_size = 2500;
  cfg.indel_probability = 0.002;
  auto plan = make_plan(cfg);
  CHECK(plan.reference == bases);
  CHECK_FALSE(plan.mutations.empty());
}

TEST_CASE("fault validation rejects unknown kinds and vertices") {
  CHECK_THROWS_AS(genomics_graph(CallerConfig{}, GenomicsFault{"bwa", "melt_down", 100}),
                  UsageError);
  CHECK_THROWS_AS(genomics_graph(CallerConfig{}, GenomicsFault{"nope", "offset_positions", 100}),
                  UsageError);
}

TEST_CASE("sequencing is reproducible byte for byte") {
  auto dir1 = fresh_dir("gen1");
  auto dir2 = fresh_dir("gen2");
  GeneratorConfig cfg = small_config(7);
  auto s1 = generate_genomics_series(cfg, "g", dir1);
  auto s2 = generate_genomics_series(cfg, "g", dir2);
  for (int test = 1; test <= cfg.series_length; ++test) {
    for (const char* sample : {"reads_normal_", "reads_tumor_"}) {
      std::string name = sample + std::to_string(test) + ".txt";
      CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    }
  }
  CHECK(slurp(dir1 / "plan.json") == slurp(dir2 / "plan.json"));
}

TEST_CASE("genomics end to end: clean run satisfies the composite") {
  auto dir = fresh_dir("clean");
  auto run = demo_helpers::run_genomics(small_config(12), {}, dir);

  // One record per vertex per test: 9 x 5.
  std::size_t records = 0;
  for (const auto& [vertex, rows] : run.trace.records()) records += rows.size();
  CHECK(records == 9 * run.graph.vertices().size());

  Verdict v = run.verdict();
  INFO("composite " << to_string(v.composite_value));
  for (const auto& [id, val] : v.atom_values) {
    INFO(id << " = " << to_string(val));
    if (run.atoms.at(id).domain.contains(run.series.group.class_tag)) {
      CHECK(val.is_true());
    }
  }
  CHECK(v.composite_value.is_true());
  CHECK(v.suspects.empty());

  // The persisted trace reproduces the verdict offline.
  ExecutionTrace reloaded = load_trace(dir / "run");
  Verdict offline = evaluate(run.composite(), run.series.group, reloaded, run.graph, run.atoms);
  CHECK(offline.composite_value == v.composite_value);
  CHECK(offline.atom_values == v.atom_values);

  // Every atom with a metric hook reports zero failures.
  RunReport report = build_report(run.composite(), {{run.series.group, run.trace}},
                                  run.graph, run.atoms);
  for (const auto& [cls, per_atom] : report.failures_by_config) {
    for (const auto& [id, f] : per_atom) {
      INFO(id);
      CHECK(f == 0.0);
    }
  }
}

TEST_CASE("genomics end to end: noisy low-coverage run is detected") {
  auto dir = fresh_dir("noisy");
  GeneratorConfig cfg = small_config(1);
  cfg.noise_rate = 0.01;
  cfg.coverage_depth = 10;
  auto run = demo_helpers::run_genomics(cfg, {}, dir);
  Verdict v = run.verdict();
  CHECK(v.composite_value.is_false());
  CHECK_FALSE(v.suspects.empty());
}

TEST_CASE("fault injection: swallow on the tumor germline caller") {
  auto dir = fresh_dir("fault-swallow");
  GenomicsFault fault{"strelka-germline-tumor", "swallow_last_mutation", 4000};
  auto run = demo_helpers::run_genomics(small_config(7), fault, dir);
  Verdict v = run.verdict();
  CHECK(v.composite_value.is_false());
  CHECK(v.atom_values.at("GT_i").is_false());
  CHECK(v.suspects.contains("strelka-germline-tumor"));
  // The spec'd localization: an error in the tumor germline path can only
  // live in the caller or its ancestors.
  CHECK(run.graph.ancestors("strelka-germline-tumor").vertex_ids ==
        std::set<std::string>{"bwa", "strelka-germline-tumor"});
}

TEST_CASE("fault injection: position offset on the somatic caller") {
  auto dir = fresh_dir("fault-offset");
  GenomicsFault fault{"strelka-somatic", "offset_positions", 4000};
  auto run = demo_helpers::run_genomics(small_config(7), fault, dir);
  Verdict v = run.verdict();
  CHECK(v.composite_value.is_false());
  CHECK(v.atom_values.at("Add").is_false());
  CHECK(v.suspects.contains("strelka-somatic"));
}

TEST_CASE("fault injection: none behaves exactly like the clean run") {
  auto dir1 = fresh_dir("fault-none-a");
  auto dir2 = fresh_dir("fault-none-b");
  auto clean = demo_helpers::run_genomics(small_config(13), {}, dir1);
  auto nofault = demo_helpers::run_genomics(small_config(13), GenomicsFault{"", "", 0}, dir2);
  Verdict v1 = clean.verdict();
  Verdict v2 = nofault.verdict();
  CHECK(v1.composite_value == v2.composite_value);
  CHECK(v1.atom_values.size() == v2.atom_values.size());
  for (const auto& [id, val] : v1.atom_values) {
    CHECK(v2.atom_values.at(id) == val);
  }
}

TEST_CASE("detector demo: three-component run satisfies the derived composite") {
  auto dir = fresh_dir("detector3");
  ExecutorRegistry registry;
  register_detector_executors(registry);
  PipelineGraph graph = detector_graph(false);
  AtomRegistry atoms;
  auto sets = detector_relation_suite(atoms, false, false);

  CombinationPolicy policy;
  DomainSet universe = detector_universe();
  auto derived = derive(graph, sets, policy, 16, universe, atoms);
  REQUIRE_FALSE(derived.exhausted());

  const CompositeCandidate* golden = nullptr;
  for (const auto& c : derived.candidates) {
    if (canonical_text(c.expr) ==
        canonical_text(RelationExpr::and_(
            RelationExpr::atom("N"),
            RelationExpr::hat_or(RelationExpr::atom("K"), RelationExpr::atom("D"))))) {
      golden = &c;
    }
  }
  REQUIRE(golden != nullptr);

  int idx = 0;
  for (const char* cls : {kClassAddCat, kClassAddDog}) {
    auto series = generate_detector_series(cls, 21 + idx, "g" + std::to_string(idx),
                                           dir / ("in" + std::to_string(idx)));
    auto trace = run_series(graph, series.group, dir / ("run" + std::to_string(idx)),
                            registry);
    Verdict v = evaluate(*golden, series.group, trace, graph, atoms);
    INFO("class " << cls);
    CHECK(v.composite_value.is_true());
    ++idx;
  }
}

TEST_CASE("detector demo: four-component composites stay defined on clean runs") {
  auto dir = fresh_dir("detector4");
  ExecutorRegistry registry;
  register_detector_executors(registry);
  PipelineGraph graph = detector_graph(true);
  AtomRegistry atoms;
  auto sets = detector_relation_suite(atoms, false, true);
  DomainSet universe = detector_universe();

  CombinationPolicy per_branch;
  per_branch.branch_mode = BranchMode::PerBranch;
  auto derived_pb = derive(graph, sets, per_branch, 16, universe, atoms);
  CombinationPolicy joint;
  joint.branch_mode = BranchMode::Joint;
  auto derived_joint = derive(graph, sets, joint, 16, universe, atoms);
  REQUIRE_FALSE(derived_pb.exhausted());
  REQUIRE_FALSE(derived_joint.exhausted());

  std::vector<CompositeCandidate> all = derived_pb.candidates;
  all.insert(all.end(), derived_joint.candidates.begin(), derived_joint.candidates.end());

  int idx = 0;
  for (const char* cls : {kClassAddCat, kClassAddDog}) {
    auto series = generate_detector_series(cls, 31 + idx, "g" + std::to_string(idx),
                                           dir / ("in" + std::to_string(idx)));
    auto trace = run_series(graph, series.group, dir / ("run" + std::to_string(idx)),
                            registry);
    for (const auto& cand : all) {
      if (!cand.domain.contains(cls)) continue;
      Verdict v = evaluate(cand, series.group, trace, graph, atoms);
      INFO("class " << cls << " composite " << to_text(cand.expr));
      // Properly wrapped composites never evaluate undefined on in-domain
      // groups, and the clean components satisfy them.
      CHECK(v.composite_value.is_defined());
    }
    ++idx;
  }
}

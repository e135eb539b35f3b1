#pragma once

// Glue between the built-in demos and the declarative spec file: verdict and
// generator registrations plus materializers that emit complete demo specs.

#include <string>

#include "metapipe/demo/detector.hpp"
#include "metapipe/demo/genomics.hpp"
#include "metapipe/spec_file.hpp"

namespace metapipe::demo {

inline void register_demo_verdicts(VerdictRegistry& registry) {
  registry.add("genomics.aligner_nonempty", [](const nlohmann::json& params) {
    std::vector<std::string> ports{"aln_normal", "aln_tumor"};
    if (params.contains("ports")) {
      ports.clear();
      for (const auto& p : params.at("ports")) ports.push_back(p.get<std::string>());
    }
    RelationAtom a = make_aligner_atom(params.value("vertex", std::string("bwa")), ports);
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("genomics.subset_calls", [](const nlohmann::json& params) {
    RelationAtom a = make_subset_atom("_", params.at("vertex").get<std::string>(), {});
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("genomics.copynumber_consistent", [](const nlohmann::json& params) {
    RelationAtom a = make_copynumber_atom(params.value("threshold", 1.5),
                                          params.value("radius", std::size_t{100}));
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("genomics.lineage_exclusive", [](const nlohmann::json&) {
    RelationAtom a = make_lineage_exclusive_atom();
    return VerdictBundle{a.verdict, a.pair_flags};
  });

  registry.add("detector.equal_pixels_preserved", [](const nlohmann::json&) {
    RelationAtom a = make_normalizer_atom();
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("detector.one_new_box", [](const nlohmann::json& params) {
    RelationAtom a = make_detector_atom("_", params.at("vertex").get<std::string>(), "_");
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("detector.one_new_or_same_box", [](const nlohmann::json& params) {
    RelationAtom a = make_star_detector_atom("_", params.at("vertex").get<std::string>(),
                                             params.at("own_class").get<std::string>());
    return VerdictBundle{a.verdict, a.pair_flags};
  });
  registry.add("detector.gate_value", [](const nlohmann::json& params) {
    std::vector<std::string> members;
    for (const auto& m : params.at("members")) members.push_back(m.get<std::string>());
    RelationAtom a = make_gate_atom("_", "_", params.at("expected").get<std::string>(),
                                    members);
    return VerdictBundle{a.verdict, a.pair_flags};
  });
}

inline GeneratorConfig generator_config_from_json(const nlohmann::json& params) {
  GeneratorConfig cfg;
  cfg.seed = params.value("seed", cfg.seed);
  cfg.indel_probability = params.value("indel_probability", cfg.indel_probability);
  cfg.copynumber_probability =
      params.value("copynumber_probability", cfg.copynumber_probability);
  cfg.min_indel_size = params.value("min_indel_size", cfg.min_indel_size);
  cfg.max_indel_size = params.value("max_indel_size", cfg.max_indel_size);
  cfg.min_dup_size = params.value("min_dup_size", cfg.min_dup_size);
  cfg.max_dup_size = params.value("max_dup_size", cfg.max_dup_size);
  cfg.series_length = params.value("series_length", cfg.series_length);
  cfg.read_length = params.value("read_length", cfg.read_length);
  cfg.coverage_depth = params.value("coverage_depth", cfg.coverage_depth);
  cfg.noise_rate = params.value("noise_rate", cfg.noise_rate);
  cfg.reference_length = params.value("reference_length", cfg.reference_length);
  cfg.reference_path = params.value("reference_path", cfg.reference_path);
  std::string kind = params.value("kind", std::string("insertions"));
  if (kind == "insertions") {
    cfg.mutation_kind = MutationSeriesKind::Insertions;
  } else if (kind == "deletions") {
    cfg.mutation_kind = MutationSeriesKind::Deletions;
  } else {
    throw ConfigError("generator kind must be 'insertions' or 'deletions', got '" + kind + "'");
  }
  return cfg;
}

inline void register_demo_generators(GeneratorRegistry& registry) {
  registry.add("genomics", [](const nlohmann::json& params, const std::string& group_id,
                              const std::string& class_tag, const std::filesystem::path& dir) {
    GeneratorConfig cfg = generator_config_from_json(params);
    const bool wants_deletions = class_tag == kClassDeletions;
    cfg.mutation_kind =
        wants_deletions ? MutationSeriesKind::Deletions : MutationSeriesKind::Insertions;
    return generate_genomics_series(cfg, group_id, dir).group;
  });
  registry.add("detector", [](const nlohmann::json& params, const std::string& group_id,
                              const std::string& class_tag, const std::filesystem::path& dir) {
    return generate_detector_series(class_tag, params.value("seed", std::uint64_t{1}),
                                    group_id, dir)
        .group;
  });
}

inline void register_demo_executors(ExecutorRegistry& registry) {
  register_genomics_executors(registry);
  register_detector_executors(registry);
}

// ---------------------------------------------------------------------------
// Demo spec materializers.

struct GenomicsDemoOptions {
  MutationSeriesKind kind = MutationSeriesKind::Insertions;
  std::uint64_t seed = 7;
  int group_count = 1;
  int series_length = 9;
  double noise_rate = 0.0;
  double coverage_depth = 30.0;
  double indel_probability = 0.0005;
  double copynumber_probability = 0.001;
  GenomicsFault fault;
};

inline nlohmann::json genomics_demo_spec(const GenomicsDemoOptions& options) {
  CallerConfig caller;
  PipelineGraph graph = genomics_graph(caller, options.fault);

  nlohmann::json j;
  j["classes"] = {kClassInsertions, kClassDeletions};

  nlohmann::json vertices = nlohmann::json::array();
  for (const auto& [id, v] : graph.vertices()) {
    nlohmann::json jv;
    jv["id"] = v.id;
    jv["inputs"] = v.inputs;
    jv["outputs"] = v.outputs;
    jv["executor"] = v.executor;
    if (!v.config.is_null()) jv["config"] = v.config;
    if (!v.fault.is_null()) jv["fault"] = v.fault;
    vertices.push_back(jv);
  }
  j["vertices"] = vertices;

  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) edges.push_back(e.to_string());
  j["edges"] = edges;
  nlohmann::json sys_in = nlohmann::json::object();
  for (const auto& [name, dests] : graph.system_inputs()) {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& p : dests) d.push_back(p.to_string());
    sys_in[name] = d;
  }
  j["system_inputs"] = sys_in;
  nlohmann::json sys_out = nlohmann::json::array();
  for (const auto& p : graph.system_outputs()) sys_out.push_back(p.to_string());
  j["system_outputs"] = sys_out;

  auto subset_atom = [](const char* id, const char* vertex, const char* cls) {
    return nlohmann::json{{"id", id},
                          {"vertex", vertex},
                          {"domain", {cls}},
                          {"verdict", "builtin:genomics.subset_calls"},
                          {"params", {{"vertex", vertex}}}};
  };
  j["atoms"] = nlohmann::json::array({
      {{"id", "BWA"},
       {"vertex", "bwa"},
       {"domain", {kClassInsertions, kClassDeletions}},
       {"verdict", "builtin:genomics.aligner_nonempty"},
       {"params", {{"vertex", "bwa"}}}},
      subset_atom("S_i", "strelka-somatic", kClassInsertions),
      subset_atom("S_d", "strelka-somatic", kClassDeletions),
      subset_atom("GT_i", "strelka-germline-tumor", kClassInsertions),
      subset_atom("GT_d", "strelka-germline-tumor", kClassDeletions),
      subset_atom("GN_i", "strelka-germline-normal", kClassInsertions),
      subset_atom("GN_d", "strelka-germline-normal", kClassDeletions),
      {{"id", "SU"},
       {"vertex", "sequenza-utils"},
       {"domain", {kClassInsertions, kClassDeletions}},
       {"verdict", "builtin:genomics.copynumber_consistent"},
       {"params", {{"threshold", 1.5}, {"radius", caller.read_length}}}},
      {{"id", "Add"},
       {"vertex", kCrossVertex},
       {"reads",
        {"strelka-germline-normal", "strelka-germline-tumor", "strelka-somatic"}},
       {"domain", {kClassInsertions, kClassDeletions}},
       {"verdict", "builtin:genomics.lineage_exclusive"}},
  });

  j["relation_sets"] = {
      {"bwa", {"atom(BWA)"}},
      {"strelka-somatic", {"atom(S_i)", "atom(S_d)"}},
      {"strelka-germline-tumor", {"atom(GT_i)", "atom(GT_d)"}},
      {"strelka-germline-normal", {"atom(GN_i)", "atom(GN_d)"}},
      {"sequenza-utils", {"atom(SU)"}},
      {kCrossVertex, {"atom(Add)"}},
  };
  j["policy"] = {{"branch_mode", "joint"}};

  const char* cls =
      options.kind == MutationSeriesKind::Insertions ? kClassInsertions : kClassDeletions;
  const char* kind_name =
      options.kind == MutationSeriesKind::Insertions ? "insertions" : "deletions";
  nlohmann::json groups = nlohmann::json::array();
  for (int i = 0; i < options.group_count; ++i) {
    groups.push_back(
        {{"id", std::string(kind_name) + "-" + std::to_string(options.seed + i)},
         {"class", cls},
         {"generator",
          {{"name", "genomics"},
           {"seed", options.seed + i},
           {"kind", kind_name},
           {"series_length", options.series_length},
           {"noise_rate", options.noise_rate},
           {"coverage_depth", options.coverage_depth},
           {"indel_probability", options.indel_probability},
           {"copynumber_probability", options.copynumber_probability}}}});
  }
  j["groups"] = groups;
  return j;
}

struct DetectorDemoOptions {
  bool four_component = false;
  bool starred = false;
  BranchMode mode = BranchMode::Joint;
  std::uint64_t seed = 1;
};

inline nlohmann::json detector_demo_spec(const DetectorDemoOptions& options) {
  PipelineGraph graph = detector_graph(options.four_component);

  nlohmann::json j;
  j["classes"] = {kClassAddCat, kClassAddDog};

  nlohmann::json vertices = nlohmann::json::array();
  for (const auto& [id, v] : graph.vertices()) {
    nlohmann::json jv;
    jv["id"] = v.id;
    jv["inputs"] = v.inputs;
    jv["outputs"] = v.outputs;
    jv["executor"] = v.executor;
    if (v.branch_group) {
      jv["branch_group"] = *v.branch_group;
      nlohmann::json classes = nlohmann::json::array();
      for (const auto& c : v.branch_classes) classes.push_back(c);
      jv["branch_classes"] = classes;
    }
    vertices.push_back(jv);
  }
  j["vertices"] = vertices;

  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) edges.push_back(e.to_string());
  j["edges"] = edges;
  nlohmann::json sys_in = nlohmann::json::object();
  for (const auto& [name, dests] : graph.system_inputs()) {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& p : dests) d.push_back(p.to_string());
    sys_in[name] = d;
  }
  j["system_inputs"] = sys_in;
  nlohmann::json sys_out = nlohmann::json::array();
  for (const auto& p : graph.system_outputs()) sys_out.push_back(p.to_string());
  j["system_outputs"] = sys_out;

  nlohmann::json atoms = nlohmann::json::array();
  atoms.push_back({{"id", "N"},
                   {"vertex", "normalizer"},
                   {"domain", {kClassAddCat, kClassAddDog}},
                   {"verdict", "builtin:detector.equal_pixels_preserved"}});
  atoms.push_back({{"id", "K"},
                   {"vertex", "cat-detector"},
                   {"domain", {kClassAddCat}},
                   {"verdict", "builtin:detector.one_new_box"},
                   {"params", {{"vertex", "cat-detector"}}}});
  atoms.push_back({{"id", "D"},
                   {"vertex", "dog-detector"},
                   {"domain", {kClassAddDog}},
                   {"verdict", "builtin:detector.one_new_box"},
                   {"params", {{"vertex", "dog-detector"}}}});
  if (options.starred) {
    atoms.push_back({{"id", "K*"},
                     {"vertex", "cat-detector"},
                     {"domain", {kClassAddCat, kClassAddDog}},
                     {"verdict", "builtin:detector.one_new_or_same_box"},
                     {"params", {{"vertex", "cat-detector"}, {"own_class", kClassAddCat}}}});
    atoms.push_back({{"id", "D*"},
                     {"vertex", "dog-detector"},
                     {"domain", {kClassAddCat, kClassAddDog}},
                     {"verdict", "builtin:detector.one_new_or_same_box"},
                     {"params", {{"vertex", "dog-detector"}, {"own_class", kClassAddDog}}}});
  }
  if (options.four_component) {
    nlohmann::json members = {"pre-false", "pre-true"};
    atoms.push_back({{"id", "P"},
                     {"vertex", "pre-true"},
                     {"domain", {kClassAddCat, kClassAddDog}},
                     {"reads_group_output", true},
                     {"verdict", "builtin:detector.gate_value"},
                     {"params", {{"members", members}, {"expected", "1"}}}});
    atoms.push_back({{"id", "Q"},
                     {"vertex", "pre-false"},
                     {"domain", {kClassAddCat, kClassAddDog}},
                     {"reads_group_output", true},
                     {"verdict", "builtin:detector.gate_value"},
                     {"params", {{"members", members}, {"expected", "0"}}}});
  }
  j["atoms"] = atoms;

  nlohmann::json sets = nlohmann::json::object();
  sets["normalizer"] = {"atom(N)"};
  if (options.starred) {
    sets["cat-detector"] = {"atom(K)", "atom(K*)"};
    sets["dog-detector"] = {"atom(D)", "atom(D*)"};
  } else {
    sets["cat-detector"] = {"atom(K)"};
    sets["dog-detector"] = {"atom(D)"};
  }
  if (options.four_component) {
    sets["pre-true"] = {"atom(P)"};
    sets["pre-false"] = {"atom(Q)"};
  }
  j["relation_sets"] = sets;

  j["policy"] = {
      {"branch_mode", options.mode == BranchMode::Joint ? "joint" : "per-branch"}};

  nlohmann::json groups = nlohmann::json::array();
  int i = 0;
  for (const char* cls : {kClassAddCat, kClassAddDog}) {
    groups.push_back({{"id", std::string("pair-") + std::to_string(i)},
                      {"class", cls},
                      {"generator", {{"name", "detector"}, {"seed", options.seed + i}}}});
    ++i;
  }
  j["groups"] = groups;
  return j;
}

}  // namespace metapipe::demo

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "metapipe/demo/spec_support.hpp"
#include "metapipe/runner.hpp"

using namespace metapipe;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "metapipe-spec-tests" /
                 (tag + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

VerdictRegistry demo_verdicts() {
  VerdictRegistry registry;
  demo::register_demo_verdicts(registry);
  return registry;
}

// Minimal two-vertex chain spec with command-based verdicts.
nlohmann::json chain_spec() {
  nlohmann::json j;
  j["classes"] = {"c1", "c2"};
  j["vertices"] = nlohmann::json::array(
      {{{"id", "a"}, {"inputs", {"in"}}, {"outputs", {"out"}},
        {"executor", "cmd: cp {in:in} {out:out}"}},
       {{"id", "b"}, {"inputs", {"in"}}, {"outputs", {"out"}},
        {"executor", "cmd: cp {in:in} {out:out}"}}});
  j["edges"] = {"a.out -> b.in"};
  j["system_inputs"] = {{"x", {"a.in"}}};
  j["system_outputs"] = {"b.out"};
  j["atoms"] = nlohmann::json::array(
      {{{"id", "RA"}, {"vertex", "a"}, {"domain", {"c1"}}, {"verdict", "cmd: true"}},
       {{"id", "RB"}, {"vertex", "b"}, {"domain", {"c2"}}, {"verdict", "cmd: true"}}});
  j["relation_sets"] = {{"a", {"atom(RA)"}}, {"b", {"atom(RB)"}}};
  j["groups"] = nlohmann::json::array();
  return j;
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(METAPIPE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("parse_spec: the materialized demo specs parse and validate") {
  VerdictRegistry verdicts = demo_verdicts();

  demo::DetectorDemoOptions det;
  det.starred = true;
  ParsedSpec spec = parse_spec(demo::detector_demo_spec(det), verdicts);
  CHECK(spec.graph.vertices().size() == 3);
  CHECK(spec.atoms.contains("K*"));
  CHECK(spec.groups.size() == 2);

  demo::DetectorDemoOptions det4;
  det4.four_component = true;
  det4.mode = BranchMode::PerBranch;
  ParsedSpec spec4 = parse_spec(demo::detector_demo_spec(det4), verdicts);
  CHECK(spec4.graph.branch_groups().count("pre") == 1);
  CHECK(spec4.policy.branch_mode == BranchMode::PerBranch);

  demo::GenomicsDemoOptions gen;
  ParsedSpec gspec = parse_spec(demo::genomics_demo_spec(gen), verdicts);
  CHECK(gspec.graph.vertices().size() == 5);
  CHECK(gspec.atoms.contains("Add"));
  CHECK(gspec.sets.size() == 6);
}

TEST_CASE("parse_spec: diagnostics carry locations") {
  VerdictRegistry verdicts = demo_verdicts();

  nlohmann::json cyclic = chain_spec();
  cyclic["edges"].push_back("b.out -> a.in");
  cyclic["vertices"][0]["inputs"] = {"in", "in2"};
  cyclic["edges"][1] = "b.out -> a.in2";
  try {
    parse_spec(cyclic, verdicts);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cycle detected") != std::string::npos);
  }

  nlohmann::json bad_atom = chain_spec();
  bad_atom["relation_sets"]["a"] = {"atom(NOPE)"};
  try {
    parse_spec(bad_atom, verdicts);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("/relation_sets/a") != std::string::npos);
    CHECK(msg.find("NOPE") != std::string::npos);
  }

  nlohmann::json bad_class = chain_spec();
  bad_class["atoms"][0]["domain"] = {"mystery"};
  CHECK_THROWS_AS(parse_spec(bad_class, verdicts), ConfigError);

  // JSON syntax errors surface line and column.
  auto dir = fresh_dir("diag");
  spit(dir / "broken.json", "{\n  \"classes\": [\n}");
  try {
    parse_spec_file(dir / "broken.json", verdicts);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("broken.json:3") != std::string::npos);
  }
}

TEST_CASE("external checker commands become verdicts") {
  auto dir = fresh_dir("checker");
  VerdictRegistry verdicts = demo_verdicts();
  nlohmann::json j = chain_spec();
  j["atoms"][0]["verdict"] = "cmd: test -f {trace}";   // true when the trace exists
  j["atoms"][1]["verdict"] = "cmd: exit 1";            // always false
  ParsedSpec spec = parse_spec(j, verdicts);

  TestGroup group;
  group.id = "g";
  group.class_tag = "c1";
  group.inputs.resize(2);
  ExecutionTrace trace("g", 2);
  CHECK(eval_atom(spec.atoms.at("RA"), group, trace).is_true());
  TestGroup g2 = group;
  g2.class_tag = "c2";
  CHECK(eval_atom(spec.atoms.at("RB"), g2, trace).is_false());
}

TEST_CASE("resolve_composite: index, expression, errors") {
  VerdictRegistry verdicts = demo_verdicts();
  demo::DetectorDemoOptions det;
  ParsedSpec spec = parse_spec(demo::detector_demo_spec(det), verdicts);
  DeriveResult derived = derive_from_spec(spec);
  REQUIRE_FALSE(derived.candidates.empty());

  CompositeCandidate by_index = resolve_composite("0", spec, derived);
  CHECK(to_text(by_index.expr) == to_text(derived.candidates[0].expr));

  CompositeCandidate by_text =
      resolve_composite("and(atom(N), hat_or(atom(K), atom(D)))", spec, derived);
  CHECK(by_text.domain == spec.classes);

  CHECK_THROWS_AS(resolve_composite("99999", spec, derived), ConfigError);
  CHECK_THROWS_AS(resolve_composite("atom(UNKNOWN)", spec, derived), ConfigError);
}

TEST_CASE("run_spec: detector spec end to end through the library") {
  auto dir = fresh_dir("runspec");
  VerdictRegistry verdicts = demo_verdicts();
  GeneratorRegistry generators;
  demo::register_demo_generators(generators);
  ExecutorRegistry executors;
  demo::register_demo_executors(executors);

  demo::DetectorDemoOptions det;
  ParsedSpec spec = parse_spec(demo::detector_demo_spec(det), verdicts);
  DeriveResult derived = derive_from_spec(spec);
  CompositeCandidate composite =
      resolve_composite("and(atom(N), hat_or(atom(K), atom(D)))", spec, derived);

  RunConfig config;
  config.workdir = dir / "work";
  config.parallel = 2;
  RunOutcome outcome = run_spec(spec, composite, generators, executors, config);
  CHECK(outcome.exit_code == kExitPass);
  CHECK(outcome.report.failed_fraction == 0.0);
  CHECK(fs::exists(dir / "work" / "report" / "summary.json"));
  CHECK(fs::exists(dir / "work" / "report" / "failed_tests.csv"));

  // A composite whose domain misses every declared group is a usage error.
  CompositeCandidate narrow = resolve_composite("atom(K)", spec, derived);
  ParsedSpec spec_cats_only = parse_spec(demo::detector_demo_spec(det), verdicts);
  spec_cats_only.groups.erase(spec_cats_only.groups.begin());  // drop the add-cat group
  RunConfig config2;
  config2.workdir = dir / "work2";
  CHECK_THROWS_AS(run_spec(spec_cats_only, narrow, generators, executors, config2),
                  ConfigError);
}

TEST_CASE("cli: derive emits the worked composite and honors exit codes") {
  auto dir = fresh_dir("cli");

  // Materialize the three-component detector spec via the library, then run
  // the real binary against it.
  demo::DetectorDemoOptions det;
  spit(dir / "detector.json", demo::detector_demo_spec(det).dump(2));
  int rc = run_cli("derive --spec " + (dir / "detector.json").string() + " --out " +
                       (dir / "derivation.json").string(),
                   dir / "derive.log");
  CHECK(rc == 0);
  std::string derivation = slurp(dir / "derivation.json");
  CHECK(derivation.find("and(atom(N), hat_or(atom(K), atom(D)))") != std::string::npos);

  // Validation failures exit 2 with diagnostics.
  nlohmann::json cyclic = chain_spec();
  cyclic["vertices"][0]["inputs"] = {"in", "in2"};
  cyclic["edges"].push_back("b.out -> a.in2");
  spit(dir / "cyclic.json", cyclic.dump(2));
  rc = run_cli("derive --spec " + (dir / "cyclic.json").string(), dir / "cyclic.log");
  CHECK(rc == 2);
  CHECK(slurp(dir / "cyclic.log").find("cycle detected") != std::string::npos);

  // Derivation exhausted (only empty-domain candidates) exits 3.
  spit(dir / "exhausted.json", chain_spec().dump(2));
  rc = run_cli("derive --spec " + (dir / "exhausted.json").string(), dir / "exhausted.log");
  CHECK(rc == 3);
}

TEST_CASE("cli: run and demo exit codes") {
  auto dir = fresh_dir("cli-run");

  int rc = run_cli("demo detector --workdir " + (dir / "det").string(), dir / "det.log");
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "det" / "spec.json"));
  CHECK(fs::exists(dir / "det" / "report" / "summary.json"));

  // A faulty component must be detected and localized: exit 1.
  rc = run_cli("demo genomics --kind insertions --seed 7 --fault swallow:strelka-germline-tumor"
               " --workdir " + (dir / "fault").string(),
               dir / "fault.log");
  CHECK(rc == 1);
  std::string log = slurp(dir / "fault.log");
  CHECK(log.find("suspect subsystem") != std::string::npos);
  CHECK(log.find("strelka-germline-tumor") != std::string::npos);

  rc = run_cli("demo nosuch", dir / "nosuch.log");
  CHECK(rc == 2);
}

TEST_CASE("cli: METAPIPE_WORKDIR overrides the workdir root") {
  auto dir = fresh_dir("cli-env");
  std::string cmd = std::string("METAPIPE_WORKDIR=") + dir.string() + " " + METAPIPE_CLI +
                    " demo detector > " + (dir / "env.log").string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(fs::exists(dir / "demo-detector" / "spec.json"));
  CHECK(fs::exists(dir / "demo-detector" / "report" / "summary.json"));
}

TEST_CASE("cli: four-component detector demo in both branch modes") {
  auto dir = fresh_dir("cli-four");

  int rc = run_cli("demo detector --four-component --mode per-branch --workdir " +
                       (dir / "pb").string(),
                   dir / "pb.log");
  CHECK(rc == 0);
  std::string derivation = slurp(dir / "pb" / "derivation.json");
  // The per-branch family pairs each branch-state relation with its view of
  // the gated detector, INDEF on the skipped side.
  CHECK(derivation.find("indef(atom(D))") != std::string::npos);
  CHECK(derivation.find("atom(P)") != std::string::npos);
  CHECK(derivation.find("atom(Q)") != std::string::npos);

  rc = run_cli("demo detector --four-component --mode joint --workdir " +
                   (dir / "joint").string(),
               dir / "joint.log");
  CHECK(rc == 0);
}

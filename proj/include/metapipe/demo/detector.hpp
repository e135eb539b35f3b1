#pragma once

// Image-detection demo: a normalizer feeding a cat detector and a dog
// detector, optionally gated by a pre-detector modeled as a two-member branch
// group. Scenes are text files; one line per object.

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "metapipe/derive.hpp"
#include "metapipe/executor.hpp"
#include "metapipe/graph.hpp"
#include "metapipe/harness.hpp"

namespace metapipe::demo {

inline constexpr const char* kClassAddCat = "add-cat";
inline constexpr const char* kClassAddDog = "add-dog";

inline DomainSet detector_universe() { return DomainSet{kClassAddCat, kClassAddDog}; }

struct SceneObject {
  std::string id;
  std::string kind;  // "cat" | "dog"
  double value = 0;  // stand-in for pixel intensity
};

inline std::string scene_to_text(const std::vector<SceneObject>& objects) {
  std::string out;
  for (const auto& o : objects) {
    out += "obj\t" + o.id + "\t" + o.kind + "\t" + format_fraction(o.value) + "\n";
  }
  return out;
}

inline std::vector<SceneObject> scene_from_text(const std::string& text) {
  std::vector<SceneObject> out;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 4 || f[0] != "obj") throw ConfigError("bad scene record: " + line);
    out.push_back(SceneObject{f[1], f[2], std::stod(f[3])});
  }
  return out;
}

inline bool scene_has_dog(const std::vector<SceneObject>& objects) {
  for (const auto& o : objects) {
    if (o.kind == "dog") return true;
  }
  return false;
}

// Piecewise linear intensity map; equal inputs stay equal.
inline double normalize_value(double v) {
  return v < 0.5 ? 0.8 * v : 0.4 + 0.6 * (v - 0.5);
}

inline void register_detector_executors(ExecutorRegistry& registry) {
  registry.add("detector.normalizer", [](const VertexSpec&) {
    return Executor{[](const ExecContext& ctx) {
                      auto objects = scene_from_text(ctx.input_text("image"));
                      for (auto& o : objects) o.value = normalize_value(o.value);
                      ctx.write_output("normalized", scene_to_text(objects));
                    },
                    nullptr};
  });

  auto detector_for = [](std::string kind) {
    return [kind](const VertexSpec&) {
      return Executor{[kind](const ExecContext& ctx) {
                        auto objects = scene_from_text(ctx.input_text("image"));
                        std::string out;
                        for (const auto& o : objects) {
                          if (o.kind == kind) {
                            out += o.id + "\t" + format_fraction(o.value) + "\n";
                          }
                        }
                        ctx.write_output("boxes", out);
                      },
                      nullptr};
    };
  };
  registry.add("detector.cat_detector", detector_for("cat"));
  registry.add("detector.dog_detector", detector_for("dog"));

  // Branch members: exactly one executes per test, decided by the scene.
  registry.add("detector.pre_true", [](const VertexSpec&) {
    return Executor{[](const ExecContext& ctx) { ctx.write_output("gate", "1\n"); },
                    [](const ExecContext& ctx) {
                      return scene_has_dog(scene_from_text(ctx.input_text("image")));
                    }};
  });
  registry.add("detector.pre_false", [](const VertexSpec&) {
    return Executor{[](const ExecContext& ctx) { ctx.write_output("gate", "0\n"); },
                    [](const ExecContext& ctx) {
                      return !scene_has_dog(scene_from_text(ctx.input_text("image")));
                    }};
  });
}

inline PipelineGraph detector_graph(bool with_pre_detector) {
  PipelineGraph g;
  VertexSpec norm;
  norm.id = "normalizer";
  norm.inputs = {"image"};
  norm.outputs = {"normalized"};
  norm.executor = "builtin:detector.normalizer";
  g.add_vertex(norm);

  VertexSpec cat;
  cat.id = "cat-detector";
  cat.inputs = {"image"};
  cat.outputs = {"boxes"};
  cat.executor = "builtin:detector.cat_detector";
  g.add_vertex(cat);

  VertexSpec dog;
  dog.id = "dog-detector";
  dog.inputs = with_pre_detector ? std::vector<std::string>{"image", "gate"}
                                 : std::vector<std::string>{"image"};
  dog.outputs = {"boxes"};
  dog.executor = "builtin:detector.dog_detector";
  g.add_vertex(dog);

  if (with_pre_detector) {
    VertexSpec pre_true;
    pre_true.id = "pre-true";
    pre_true.inputs = {"image"};
    pre_true.outputs = {"gate"};
    pre_true.executor = "builtin:detector.pre_true";
    pre_true.branch_group = "pre";
    pre_true.branch_classes = DomainSet{kClassAddDog};
    g.add_vertex(pre_true);

    VertexSpec pre_false = pre_true;
    pre_false.id = "pre-false";
    pre_false.executor = "builtin:detector.pre_false";
    pre_false.branch_classes = DomainSet{kClassAddCat};
    g.add_vertex(pre_false);

    g.add_edge("normalizer.normalized -> pre-true.image");
    g.add_edge("normalizer.normalized -> pre-false.image");
    g.add_edge("pre-true.gate -> dog-detector.gate");
  }

  g.add_edge("normalizer.normalized -> cat-detector.image");
  g.add_edge("normalizer.normalized -> dog-detector.image");
  g.add_system_input("image", {PortRef{"normalizer", "image"}});
  g.add_system_output(PortRef{"cat-detector", "boxes"});
  g.add_system_output(PortRef{"dog-detector", "boxes"});
  return g;
}

// ---------------------------------------------------------------------------
// Relations.

namespace verdicts {

inline std::optional<std::set<std::string>> boxes_at(const ExecutionTrace& trace,
                                                     const std::string& vertex,
                                                     std::size_t k) {
  auto text = trace.output_text(vertex, "boxes", k);
  if (!text) return std::nullopt;
  std::set<std::string> out;
  for (const auto& line : split(*text, '\n')) {
    if (!line.empty()) out.insert(line);
  }
  return out;
}

// All previously found objects plus exactly one new one.
inline TriValue one_new_box(const ExecutionTrace& trace, const std::string& vertex,
                            std::size_t n) {
  std::optional<std::set<std::string>> prev;
  for (std::size_t k = 0; k < n; ++k) {
    auto cur = boxes_at(trace, vertex, k);
    if (!cur) return TriValue::not_computed();
    if (prev) {
      bool superset = std::includes(cur->begin(), cur->end(), prev->begin(), prev->end());
      if (!superset || cur->size() != prev->size() + 1) return TriValue::make_false();
    }
    prev = std::move(cur);
  }
  return TriValue::make_true();
}

// Identical detections across the pair (the added animal is not this kind).
inline TriValue same_boxes(const ExecutionTrace& trace, const std::string& vertex,
                           std::size_t n) {
  std::optional<std::set<std::string>> prev;
  for (std::size_t k = 0; k < n; ++k) {
    auto cur = boxes_at(trace, vertex, k);
    if (!cur) return TriValue::not_computed();
    if (prev && *cur != *prev) return TriValue::make_false();
    prev = std::move(cur);
  }
  return TriValue::make_true();
}

}  // namespace verdicts

// Equal pixels before normalization stay equal after it.
inline RelationAtom make_normalizer_atom() {
  RelationAtom n;
  n.id = "N";
  n.vertex = "normalizer";
  n.domain = detector_universe();
  n.verdict = [](const TestGroup& group, const ExecutionTrace& trace) {
    std::map<std::string, std::string> raw_to_norm;
    for (std::size_t k = 0; k < group.size(); ++k) {
      auto in = trace.input_text("normalizer", "image", k);
      auto out = trace.output_text("normalizer", "normalized", k);
      if (!in || !out) return TriValue::not_computed();
      auto before = scene_from_text(*in);
      auto after = scene_from_text(*out);
      if (before.size() != after.size()) return TriValue::make_false();
      for (std::size_t i = 0; i < before.size(); ++i) {
        std::string raw = format_fraction(before[i].value);
        std::string norm = format_fraction(after[i].value);
        auto [it, inserted] = raw_to_norm.emplace(raw, norm);
        if (!inserted && it->second != norm) return TriValue::make_false();
      }
    }
    return TriValue::make_true();
  };
  return n;
}

// All previously detected animals plus exactly one new one of this kind.
inline RelationAtom make_detector_atom(const std::string& id, const std::string& vertex,
                                       const std::string& own_class) {
  RelationAtom a;
  a.id = id;
  a.vertex = vertex;
  a.domain = DomainSet{own_class};
  a.verdict = [vertex](const TestGroup& group, const ExecutionTrace& trace) {
    return verdicts::one_new_box(trace, vertex, group.size());
  };
  return a;
}

// Domain-extended variant: one new detection on its own class, identical
// detections when the added animal is the other kind.
inline RelationAtom make_star_detector_atom(const std::string& id, const std::string& vertex,
                                            const std::string& own_class) {
  RelationAtom a;
  a.id = id;
  a.vertex = vertex;
  a.domain = detector_universe();
  a.verdict = [vertex, own_class](const TestGroup& group, const ExecutionTrace& trace) {
    if (group.class_tag == own_class) {
      return verdicts::one_new_box(trace, vertex, group.size());
    }
    return verdicts::same_boxes(trace, vertex, group.size());
  };
  return a;
}

// Branch-state relation over the gate of whichever member executed.
inline RelationAtom make_gate_atom(const std::string& id, const std::string& vertex,
                                   const std::string& expected,
                                   std::vector<std::string> members = {"pre-false",
                                                                       "pre-true"}) {
  RelationAtom a;
  a.id = id;
  a.vertex = vertex;
  a.domain = detector_universe();
  // Reads the gate of whichever member executed: always computed.
  a.reads_group_output = true;
  a.verdict = [expected, members](const TestGroup& group, const ExecutionTrace& trace) {
    for (std::size_t k = 0; k < group.size(); ++k) {
      auto gate = trace.group_output_text(members, "gate", k);
      if (!gate) return TriValue::not_computed();
      if (trim(*gate) != expected) return TriValue::make_false();
    }
    return TriValue::make_true();
  };
  return a;
}

// Atom suite for the detector demos. `starred` adds the domain-extended
// detector relations; `with_pre_detector` adds the branch-state relations.
inline std::vector<RelationSet> detector_relation_suite(AtomRegistry& atoms, bool starred,
                                                        bool with_pre_detector) {
  atoms.add(make_normalizer_atom());
  atoms.add(make_detector_atom("K", "cat-detector", kClassAddCat));
  atoms.add(make_detector_atom("D", "dog-detector", kClassAddDog));
  if (starred) {
    atoms.add(make_star_detector_atom("K*", "cat-detector", kClassAddCat));
    atoms.add(make_star_detector_atom("D*", "dog-detector", kClassAddDog));
  }
  if (with_pre_detector) {
    atoms.add(make_gate_atom("P", "pre-true", "1"));
    atoms.add(make_gate_atom("Q", "pre-false", "0"));
  }

  std::vector<RelationSet> sets;
  sets.push_back({"normalizer", {RelationExpr::atom("N")}});
  if (starred) {
    sets.push_back({"cat-detector", {RelationExpr::atom("K"), RelationExpr::atom("K*")}});
    sets.push_back({"dog-detector", {RelationExpr::atom("D"), RelationExpr::atom("D*")}});
  } else {
    sets.push_back({"cat-detector", {RelationExpr::atom("K")}});
    sets.push_back({"dog-detector", {RelationExpr::atom("D")}});
  }
  if (with_pre_detector) {
    sets.push_back({"pre-true", {RelationExpr::atom("P")}});
    sets.push_back({"pre-false", {RelationExpr::atom("Q")}});
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Scene-pair generation.

struct DetectorSeries {
  TestGroup group;
};

// A pair (a, b): b is a copy of a plus one added animal of the class's kind.
// add-dog scenes start with a dog so the pre-detector branch is stable
// within the pair; add-cat scenes contain no dogs at all.
inline DetectorSeries generate_detector_series(const std::string& class_tag,
                                               std::uint64_t seed,
                                               const std::string& group_id,
                                               const std::filesystem::path& dir) {
  std::mt19937_64 rng(mix_seed(seed, 0x53434e45ull));
  std::uniform_int_distribution<int> n_objects(2, 5);
  std::uniform_int_distribution<int> grid(1, 9);

  const bool add_dog = class_tag == kClassAddDog;
  std::vector<SceneObject> base;
  int id = 0;
  const int n = n_objects(rng);
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.id = "o" + std::to_string(id++);
    o.kind = "cat";
    o.value = grid(rng) / 10.0;
    base.push_back(o);
  }
  if (add_dog) {
    SceneObject o;
    o.id = "o" + std::to_string(id++);
    o.kind = "dog";
    o.value = grid(rng) / 10.0;
    base.push_back(o);
  }

  std::vector<SceneObject> extended = base;
  SceneObject added;
  added.id = "o" + std::to_string(id++);
  added.kind = add_dog ? "dog" : "cat";
  added.value = grid(rng) / 10.0;
  extended.push_back(added);

  std::filesystem::create_directories(dir);
  spit(dir / "scene_a.txt", scene_to_text(base));
  spit(dir / "scene_b.txt", scene_to_text(extended));

  DetectorSeries out;
  out.group.id = group_id;
  out.group.class_tag = class_tag;
  out.group.metadata["seed"] = std::to_string(seed);
  out.group.inputs.push_back({{"image", (dir / "scene_a.txt").string()}});
  out.group.inputs.push_back({{"image", (dir / "scene_b.txt").string()}});
  return out;
}

}  // namespace metapipe::demo

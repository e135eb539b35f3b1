#pragma once

// Shared graph/atom fixtures for the algorithm-level tests. Verdicts here are
// constant-true stubs: derivation only consults structure and domains.

#include <string>
#include <vector>

#include "metapipe/derive.hpp"
#include "metapipe/graph.hpp"

namespace fixtures {

using namespace metapipe;

inline VertexSpec vertex(std::string id, std::vector<std::string> in,
                         std::vector<std::string> out) {
  VertexSpec v;
  v.id = std::move(id);
  v.inputs = std::move(in);
  v.outputs = std::move(out);
  v.executor = "builtin:identity";
  return v;
}

inline RelationAtom stub_atom(std::string id, std::string vtx, DomainSet dom) {
  RelationAtom a;
  a.id = std::move(id);
  a.vertex = std::move(vtx);
  a.domain = std::move(dom);
  a.verdict = [](const TestGroup&, const ExecutionTrace&) { return TriValue::make_true(); };
  return a;
}

struct Detector3 {
  PipelineGraph graph;
  AtomRegistry atoms;
  DomainSet universe{"add-cat", "add-dog"};
  std::vector<RelationSet> sets;        // plain K/D
  std::vector<RelationSet> sets_star;   // starred variants
  std::vector<RelationSet> sets_both;   // K,K* and D,D*

  Detector3() {
    graph.add_vertex(vertex("normalizer", {"image"}, {"normalized"}));
    graph.add_vertex(vertex("cat-detector", {"image"}, {"boxes"}));
    graph.add_vertex(vertex("dog-detector", {"image"}, {"boxes"}));
    graph.add_edge("normalizer.normalized -> cat-detector.image");
    graph.add_edge("normalizer.normalized -> dog-detector.image");
    graph.add_system_input("image", {PortRef{"normalizer", "image"}});
    graph.add_system_output(PortRef{"cat-detector", "boxes"});
    graph.add_system_output(PortRef{"dog-detector", "boxes"});

    atoms.add(stub_atom("N", "normalizer", universe));
    atoms.add(stub_atom("K", "cat-detector", DomainSet{"add-cat"}));
    atoms.add(stub_atom("D", "dog-detector", DomainSet{"add-dog"}));
    atoms.add(stub_atom("K*", "cat-detector", universe));
    atoms.add(stub_atom("D*", "dog-detector", universe));

    sets = {{"normalizer", {RelationExpr::atom("N")}},
            {"cat-detector", {RelationExpr::atom("K")}},
            {"dog-detector", {RelationExpr::atom("D")}}};
    sets_star = {{"normalizer", {RelationExpr::atom("N")}},
                 {"cat-detector", {RelationExpr::atom("K*")}},
                 {"dog-detector", {RelationExpr::atom("D*")}}};
    sets_both = {{"normalizer", {RelationExpr::atom("N")}},
                 {"cat-detector", {RelationExpr::atom("K"), RelationExpr::atom("K*")}},
                 {"dog-detector", {RelationExpr::atom("D"), RelationExpr::atom("D*")}}};
  }
};

// Detector with a pre-detector modeled as a two-member branch group; the dog
// detector consumes the gate of the true member and is skipped otherwise.
struct Detector4 {
  PipelineGraph graph;
  AtomRegistry atoms;
  DomainSet universe{"add-cat", "add-dog"};
  std::vector<RelationSet> sets;

  Detector4() {
    graph.add_vertex(vertex("normalizer", {"image"}, {"normalized"}));
    graph.add_vertex(vertex("cat-detector", {"image"}, {"boxes"}));

    VertexSpec dog = vertex("dog-detector", {"image", "gate"}, {"boxes"});
    graph.add_vertex(dog);

    VertexSpec pre_true = vertex("pre-true", {"image"}, {"gate"});
    pre_true.branch_group = "pre";
    pre_true.branch_classes = DomainSet{"add-dog"};
    graph.add_vertex(pre_true);

    VertexSpec pre_false = vertex("pre-false", {"image"}, {"gate"});
    pre_false.branch_group = "pre";
    pre_false.branch_classes = DomainSet{"add-cat"};
    graph.add_vertex(pre_false);

    graph.add_edge("normalizer.normalized -> cat-detector.image");
    graph.add_edge("normalizer.normalized -> dog-detector.image");
    graph.add_edge("normalizer.normalized -> pre-true.image");
    graph.add_edge("normalizer.normalized -> pre-false.image");
    graph.add_edge("pre-true.gate -> dog-detector.gate");
    graph.add_system_input("image", {PortRef{"normalizer", "image"}});
    graph.add_system_output(PortRef{"cat-detector", "boxes"});
    graph.add_system_output(PortRef{"dog-detector", "boxes"});

    atoms.add(stub_atom("N", "normalizer", universe));
    atoms.add(stub_atom("K", "cat-detector", DomainSet{"add-cat"}));
    atoms.add(stub_atom("D", "dog-detector", DomainSet{"add-dog"}));
    RelationAtom p = stub_atom("P", "pre-true", universe);
    p.reads_group_output = true;
    atoms.add(p);
    RelationAtom q = stub_atom("Q", "pre-false", universe);
    q.reads_group_output = true;
    atoms.add(q);

    sets = {{"normalizer", {RelationExpr::atom("N")}},
            {"cat-detector", {RelationExpr::atom("K")}},
            {"dog-detector", {RelationExpr::atom("D")}},
            {"pre-true", {RelationExpr::atom("P")}},
            {"pre-false", {RelationExpr::atom("Q")}}};
  }
};

// Shape of the genetic-analysis pipeline with the published relation suite.
struct GenomicsShape {
  PipelineGraph graph;
  AtomRegistry atoms;
  DomainSet universe{"add-insertions", "add-deletions"};
  std::vector<RelationSet> sets;

  GenomicsShape() {
    graph.add_vertex(vertex("bwa", {"reads_normal", "reads_tumor", "reference"},
                            {"aln_normal", "aln_tumor"}));
    graph.add_vertex(vertex("strelka-somatic", {"aln_normal", "aln_tumor", "reference"},
                            {"calls"}));
    graph.add_vertex(vertex("strelka-germline-tumor", {"aln", "reference"}, {"calls"}));
    graph.add_vertex(vertex("strelka-germline-normal", {"aln", "reference"}, {"calls"}));
    graph.add_vertex(vertex("sequenza-utils", {"aln_normal", "aln_tumor", "reference"},
                            {"pileup"}));
    graph.add_edge("bwa.aln_normal -> strelka-somatic.aln_normal");
    graph.add_edge("bwa.aln_tumor -> strelka-somatic.aln_tumor");
    graph.add_edge("bwa.aln_tumor -> strelka-germline-tumor.aln");
    graph.add_edge("bwa.aln_normal -> strelka-germline-normal.aln");
    graph.add_edge("bwa.aln_normal -> sequenza-utils.aln_normal");
    graph.add_edge("bwa.aln_tumor -> sequenza-utils.aln_tumor");
    graph.add_system_input("reads_normal", {PortRef{"bwa", "reads_normal"}});
    graph.add_system_input("reads_tumor", {PortRef{"bwa", "reads_tumor"}});
    graph.add_system_input(
        "reference",
        {PortRef{"bwa", "reference"}, PortRef{"strelka-somatic", "reference"},
         PortRef{"strelka-germline-tumor", "reference"},
         PortRef{"strelka-germline-normal", "reference"},
         PortRef{"sequenza-utils", "reference"}});
    graph.add_system_output(PortRef{"strelka-somatic", "calls"});
    graph.add_system_output(PortRef{"strelka-germline-tumor", "calls"});
    graph.add_system_output(PortRef{"strelka-germline-normal", "calls"});
    graph.add_system_output(PortRef{"sequenza-utils", "pileup"});

    DomainSet ins{"add-insertions"};
    DomainSet del{"add-deletions"};
    atoms.add(stub_atom("BWA", "bwa", universe));
    atoms.add(stub_atom("S_i", "strelka-somatic", ins));
    atoms.add(stub_atom("S_d", "strelka-somatic", del));
    atoms.add(stub_atom("GT_i", "strelka-germline-tumor", ins));
    atoms.add(stub_atom("GT_d", "strelka-germline-tumor", del));
    atoms.add(stub_atom("GN_i", "strelka-germline-normal", ins));
    atoms.add(stub_atom("GN_d", "strelka-germline-normal", del));
    atoms.add(stub_atom("SU", "sequenza-utils", universe));
    RelationAtom add = stub_atom("Add", kCrossVertex, universe);
    add.reads = {"strelka-germline-tumor", "strelka-germline-normal", "strelka-somatic"};
    atoms.add(add);

    sets = {{"bwa", {RelationExpr::atom("BWA")}},
            {"strelka-somatic", {RelationExpr::atom("S_i"), RelationExpr::atom("S_d")}},
            {"strelka-germline-tumor", {RelationExpr::atom("GT_i"), RelationExpr::atom("GT_d")}},
            {"strelka-germline-normal", {RelationExpr::atom("GN_i"), RelationExpr::atom("GN_d")}},
            {"sequenza-utils", {RelationExpr::atom("SU")}},
            {kCrossVertex, {RelationExpr::atom("Add")}}};
  }
};

inline bool contains_candidate(const std::vector<CompositeCandidate>& candidates,
                               const RelationExpr& expected) {
  const std::string want = canonical_text(expected);
  for (const auto& c : candidates) {
    if (canonical_text(c.expr) == want) return true;
  }
  return false;
}

}  // namespace fixtures

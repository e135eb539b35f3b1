#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "metapipe/errors.hpp"
#include "metapipe/util.hpp"

#include "json.hpp"

namespace metapipe::demo {

enum class MutationKind { MicroInsertion, MicroDeletion, Duplication };
enum class Lineage { Germline, Somatic };
enum class MutationSeriesKind { Insertions, Deletions };

inline std::string to_string(MutationKind k) {
  switch (k) {
    case MutationKind::MicroInsertion: return "micro-insertion";
    case MutationKind::MicroDeletion: return "micro-deletion";
    case MutationKind::Duplication: return "duplication";
  }
  return "?";
}

inline std::string to_string(Lineage l) {
  return l == Lineage::Germline ? "germline" : "somatic";
}

struct Mutation {
  std::size_t anchor = 0;  // 0-based reference index of the base before the event
  MutationKind kind = MutationKind::MicroInsertion;
  std::string payload;     // inserted bases (insertion / duplication copy)
  std::size_t length = 0;  // deleted or duplicated span
  Lineage lineage = Lineage::Germline;
  int introduced_at = 1;   // 1-based test index; cumulative from there on

  // Reference interval occupied by the event (used for disjointness and for
  // fault overlap checks). A duplication spans the copied segment.
  std::size_t span_begin() const {
    return kind == MutationKind::Duplication ? anchor + 1 - length : anchor;
  }
  std::size_t span_end() const {
    switch (kind) {
      case MutationKind::MicroInsertion: return anchor + 1;
      case MutationKind::MicroDeletion: return anchor + length + 1;
      case MutationKind::Duplication: return anchor + 1;
    }
    return anchor + 1;
  }
};

struct SegmentInfo {
  std::size_t begin = 0, end = 0;
  MutationKind kind = MutationKind::MicroInsertion;
};

struct MutationPlan {
  std::string reference;
  std::vector<SegmentInfo> segments;
  std::vector<Mutation> mutations;  // sorted by anchor
  int series_length = 9;
  std::uint64_t effective_seed = 0;
};

struct VariantCall {
  std::size_t pos = 0;
  std::string ref, alt;

  friend bool operator<(const VariantCall& a, const VariantCall& b) {
    return std::tie(a.pos, a.ref, a.alt) < std::tie(b.pos, b.ref, b.alt);
  }
  friend bool operator==(const VariantCall& a, const VariantCall& b) {
    return a.pos == b.pos && a.ref == b.ref && a.alt == b.alt;
  }
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  double indel_probability = 0.0005;       // per base
  double copynumber_probability = 0.001;   // per segment window
  int min_indel_size = 1;
  int max_indel_size = 50;
  int min_dup_size = 5000;
  int max_dup_size = 10000;
  int series_length = 9;
  MutationSeriesKind mutation_kind = MutationSeriesKind::Insertions;
  int read_length = 100;
  double coverage_depth = 30.0;
  double noise_rate = 0.0;
  std::size_t reference_length = 50000;
  std::string reference_path;  // import hook for an external nucleotide file
  int max_seed_retries = 16;

  void validate() const {
    if (min_indel_size < 1 || min_indel_size > max_indel_size || max_indel_size > 50) {
      throw UsageError("indel size bounds must satisfy 1 <= min <= max <= 50");
    }
    if (min_dup_size > max_dup_size) throw UsageError("duplication size bounds inverted");
    if (indel_probability < 0 || indel_probability > 1 || copynumber_probability < 0 ||
        copynumber_probability > 1 || noise_rate < 0 || noise_rate > 1) {
      throw UsageError("probabilities must lie in [0, 1]");
    }
    if (series_length < 2) throw UsageError("series_length must be >= 2");
    if (read_length < 40) throw UsageError("read_length must be >= 40");
    if (coverage_depth <= 0) throw UsageError("coverage_depth must be positive");
  }
};

namespace detail {

inline char random_base(std::mt19937_64& rng) {
  static const char bases[] = {'A', 'C', 'G', 'T'};
  return bases[rng() % 4];
}

inline std::string random_sequence(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, 'A');
  for (auto& c : s) c = random_base(rng);
  return s;
}

}  // namespace detail

inline std::string load_reference_file(const std::string& path) {
  std::string raw = slurp(path);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u == 'A' || u == 'C' || u == 'G' || u == 'T') out.push_back(u);
  }
  if (out.size() < 1000) throw ConfigError("reference file too short: " + path);
  return out;
}

// Generates the mutation plan: random, uniform placement; disjoint padded
// segments, one mutation kind per segment; cumulative introduction indices.
// Retries with an incremented seed when no mutation gets sampled.
inline MutationPlan make_plan(const GeneratorConfig& config) {
  config.validate();
  for (int attempt = 0; attempt <= config.max_seed_retries; ++attempt) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(attempt);
    std::mt19937_64 rng(mix_seed(seed, 0x504c414eull));  // plan stream
    MutationPlan plan;
    plan.series_length = config.series_length;
    plan.effective_seed = seed;
    plan.reference = config.reference_path.empty()
                         ? detail::random_sequence(rng, config.reference_length)
                         : load_reference_file(config.reference_path);
    const std::size_t L = plan.reference.size();
    const std::size_t margin = static_cast<std::size_t>(config.read_length);
    if (L < 4 * margin + static_cast<std::size_t>(config.max_dup_size)) {
      throw UsageError("reference too short for the configured read/duplication sizes");
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> indel_size(config.min_indel_size, config.max_indel_size);
    std::uniform_int_distribution<int> dup_size(config.min_dup_size, config.max_dup_size);
    std::uniform_int_distribution<int> intro(1, config.series_length);

    std::vector<Mutation> candidates;

    for (std::size_t p = margin; p + margin < L; ++p) {
      if (unit(rng) >= config.indel_probability) continue;
      Mutation m;
      m.anchor = p;
      m.lineage = unit(rng) < 0.5 ? Lineage::Germline : Lineage::Somatic;
      m.introduced_at = intro(rng);
      int size = indel_size(rng);
      if (config.mutation_kind == MutationSeriesKind::Insertions) {
        m.kind = MutationKind::MicroInsertion;
        m.payload = detail::random_sequence(rng, static_cast<std::size_t>(size));
        // Keep the breakpoint unambiguous: the first inserted base must
        // differ from the base that follows the anchor.
        if (p + 1 < L && m.payload[0] == plan.reference[p + 1]) {
          for (char b : {'A', 'C', 'G', 'T'}) {
            if (b != plan.reference[p + 1]) {
              m.payload[0] = b;
              break;
            }
          }
        }
      } else {
        m.kind = MutationKind::MicroDeletion;
        m.length = static_cast<std::size_t>(size);
        if (p + m.length + 1 >= L) continue;
        // Unambiguous deletion: the first deleted base must differ from the
        // first base after the deleted block.
        bool ok = false;
        for (std::size_t s = m.length; s >= static_cast<std::size_t>(config.min_indel_size);
             --s) {
          if (plan.reference[p + 1] != plan.reference[p + s + 1]) {
            m.length = s;
            ok = true;
            break;
          }
          if (s == 1) break;
        }
        if (!ok) continue;
      }
      candidates.push_back(std::move(m));
    }

    // Duplications: one window per max_dup_size span.
    const std::size_t window = static_cast<std::size_t>(config.max_dup_size);
    for (std::size_t w = margin; w + window + margin <= L; w += window) {
      if (unit(rng) >= config.copynumber_probability) continue;
      Mutation m;
      m.kind = MutationKind::Duplication;
      m.length = static_cast<std::size_t>(dup_size(rng));
      std::uniform_int_distribution<std::size_t> off(0, window - m.length);
      std::size_t start = w + off(rng);
      m.anchor = start + m.length - 1;  // copy inserted after the segment
      m.payload = plan.reference.substr(start, m.length);
      m.lineage = unit(rng) < 0.5 ? Lineage::Germline : Lineage::Somatic;
      m.introduced_at = intro(rng);
      candidates.push_back(std::move(m));
    }

    // Disjoint segments with padding, so no read spans two events and calls
    // at one event are unaffected by its neighbours.
    std::sort(candidates.begin(), candidates.end(), [](const Mutation& a, const Mutation& b) {
      return a.span_begin() < b.span_begin();
    });
    const std::size_t pad =
        static_cast<std::size_t>(config.read_length + config.max_indel_size);
    std::size_t next_free = 0;
    for (auto& m : candidates) {
      if (m.span_begin() < next_free) continue;
      plan.mutations.push_back(m);
      plan.segments.push_back(SegmentInfo{m.span_begin(), m.span_end(), m.kind});
      next_free = m.span_end() + pad;
    }
    std::sort(plan.mutations.begin(), plan.mutations.end(),
              [](const Mutation& a, const Mutation& b) { return a.anchor < b.anchor; });

    if (!plan.mutations.empty()) return plan;
  }
  throw ConfigError("generator sampled zero mutations after " +
                    std::to_string(config.max_seed_retries + 1) + " seeds; raise the "
                    "mutation probabilities or the reference length");
}

// Mutations visible in a sample at 1-based test index `test` (cumulative).
inline std::vector<Mutation> visible_mutations(const MutationPlan& plan, int test,
                                               bool tumor_sample) {
  std::vector<Mutation> out;
  for (const auto& m : plan.mutations) {
    if (m.introduced_at > test) continue;
    if (!tumor_sample && m.lineage == Lineage::Somatic) continue;
    out.push_back(m);
  }
  return out;
}

inline std::string apply_mutations(const std::string& reference,
                                   std::vector<Mutation> mutations) {
  std::sort(mutations.begin(), mutations.end(),
            [](const Mutation& a, const Mutation& b) { return a.anchor > b.anchor; });
  std::string genome = reference;
  for (const auto& m : mutations) {
    switch (m.kind) {
      case MutationKind::MicroInsertion:
      case MutationKind::Duplication:
        genome.insert(m.anchor + 1, m.payload);
        break;
      case MutationKind::MicroDeletion:
        genome.erase(m.anchor + 1, m.length);
        break;
    }
  }
  return genome;
}

inline std::string genome_at_test(const MutationPlan& plan, int test, bool tumor_sample) {
  return apply_mutations(plan.reference, visible_mutations(plan, test, tumor_sample));
}

// Ground-truth call set: what a perfect micro-indel caller would report for
// the sample at the given test. Duplications are copy-number events, not
// indel calls.
inline std::set<VariantCall> true_calls(const MutationPlan& plan, int test,
                                        bool tumor_sample) {
  std::set<VariantCall> out;
  for (const auto& m : visible_mutations(plan, test, tumor_sample)) {
    if (m.kind == MutationKind::Duplication) continue;
    VariantCall c;
    c.pos = m.anchor;
    if (m.kind == MutationKind::MicroInsertion) {
      c.ref = plan.reference.substr(m.anchor, 1);
      c.alt = c.ref + m.payload;
    } else {
      c.ref = plan.reference.substr(m.anchor, m.length + 1);
      c.alt = plan.reference.substr(m.anchor, 1);
    }
    out.insert(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plan (de)serialization: the configuration file describing all mutations.

inline nlohmann::json plan_to_json(const MutationPlan& plan) {
  nlohmann::json j;
  j["series_length"] = plan.series_length;
  j["effective_seed"] = plan.effective_seed;
  j["reference_length"] = plan.reference.size();
  nlohmann::json muts = nlohmann::json::array();
  for (const auto& m : plan.mutations) {
    muts.push_back({{"anchor", m.anchor},
                    {"kind", to_string(m.kind)},
                    {"payload", m.payload},
                    {"length", m.length},
                    {"lineage", to_string(m.lineage)},
                    {"introduced_at", m.introduced_at}});
  }
  j["mutations"] = muts;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : plan.segments) {
    segs.push_back({{"begin", s.begin}, {"end", s.end}, {"kind", to_string(s.kind)}});
  }
  j["segments"] = segs;
  return j;
}

inline MutationKind mutation_kind_from_string(const std::string& s) {
  if (s == "micro-insertion") return MutationKind::MicroInsertion;
  if (s == "micro-deletion") return MutationKind::MicroDeletion;
  if (s == "duplication") return MutationKind::Duplication;
  throw ConfigError("unknown mutation kind: " + s);
}

inline MutationPlan plan_from_json(const nlohmann::json& j, std::string reference) {
  MutationPlan plan;
  plan.reference = std::move(reference);
  plan.series_length = j.at("series_length").get<int>();
  plan.effective_seed = j.at("effective_seed").get<std::uint64_t>();
  for (const auto& m : j.at("mutations")) {
    Mutation mut;
    mut.anchor = m.at("anchor").get<std::size_t>();
    mut.kind = mutation_kind_from_string(m.at("kind").get<std::string>());
    mut.payload = m.at("payload").get<std::string>();
    mut.length = m.at("length").get<std::size_t>();
    mut.lineage = m.at("lineage").get<std::string>() == "germline" ? Lineage::Germline
                                                                   : Lineage::Somatic;
    mut.introduced_at = m.at("introduced_at").get<int>();
    plan.mutations.push_back(std::move(mut));
  }
  for (const auto& s : j.value("segments", nlohmann::json::array())) {
    plan.segments.push_back(SegmentInfo{s.at("begin").get<std::size_t>(),
                                        s.at("end").get<std::size_t>(),
                                        mutation_kind_from_string(s.at("kind").get<std::string>())});
  }
  return plan;
}

}  // namespace metapipe::demo

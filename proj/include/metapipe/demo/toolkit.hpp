#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "metapipe/demo/genome.hpp"
#include "metapipe/demo/sequencing.hpp"

namespace metapipe::demo {

// One placed read. Exact and substitution-only placements are 'M'; a read
// spanning a micro-indel carries the event evidence the callers aggregate.
struct Alignment {
  std::string read_id;
  std::size_t pos = 0;  // leftmost reference coordinate
  char event = 'M';     // 'M', 'I', 'D'
  std::size_t anchor = 0;     // event anchor (base before the indel)
  std::string inserted;       // event == 'I'
  std::size_t deleted_len = 0;  // event == 'D'
  int mismatches = 0;

  std::size_t ref_span(std::size_t read_len) const {
    if (event == 'I') return read_len - inserted.size();
    if (event == 'D') return read_len + deleted_len;
    return read_len;
  }
};

struct AlignParams {
  int seed_length = 16;
  int max_indel = 50;
  double max_mismatch_fraction = 0.10;
  int max_seed_hits = 16;
};

namespace detail {

inline std::size_t parse_count(const std::string& field, const std::string& line) {
  try {
    return std::stoull(field);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric field '" + field + "' in record: " + line);
  }
}

inline std::optional<std::uint64_t> pack_kmer(const std::string& s, std::size_t at, int k) {
  std::uint64_t v = 0;
  for (int i = 0; i < k; ++i) {
    switch (s[at + static_cast<std::size_t>(i)]) {
      case 'A': v = v << 2; break;
      case 'C': v = (v << 2) | 1; break;
      case 'G': v = (v << 2) | 2; break;
      case 'T': v = (v << 2) | 3; break;
      default: return std::nullopt;
    }
  }
  return v;
}

class KmerIndex {
 public:
  KmerIndex(const std::string& reference, int k) : k_(k) {
    if (reference.size() < static_cast<std::size_t>(k)) return;
    index_.reserve(reference.size());
    for (std::size_t p = 0; p + static_cast<std::size_t>(k) <= reference.size(); ++p) {
      if (auto key = pack_kmer(reference, p, k)) {
        index_[*key].push_back(static_cast<std::uint32_t>(p));
      }
    }
  }

  const std::vector<std::uint32_t>* find(const std::string& s, std::size_t at) const {
    if (at + static_cast<std::size_t>(k_) > s.size()) return nullptr;
    auto key = pack_kmer(s, at, k_);
    if (!key) return nullptr;
    auto it = index_.find(*key);
    return it == index_.end() ? nullptr : &it->second;
  }

 private:
  int k_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> index_;
};

inline std::size_t first_divergence(const std::string& read, const std::string& ref,
                                    std::size_t pos) {
  std::size_t d = 0;
  while (d < read.size() && pos + d < ref.size() && read[d] == ref[pos + d]) ++d;
  return d;
}

inline bool suffix_matches(const std::string& read, std::size_t read_from,
                           const std::string& ref, std::size_t ref_from) {
  if (ref_from + (read.size() - read_from) > ref.size()) return false;
  for (std::size_t i = read_from; i < read.size(); ++i) {
    if (read[i] != ref[ref_from + (i - read_from)]) return false;
  }
  return true;
}

}  // namespace detail

// Seed-and-verify placement: the first and last k-mers anchor the read; a
// consistent offset between them is either a clean placement, a tolerated
// substitution run, or micro-indel evidence with the breakpoint at the first
// divergence. Unplaceable reads are dropped.
inline std::vector<Alignment> align_reads(const std::vector<Read>& reads,
                                          const std::string& reference,
                                          const AlignParams& params = {}) {
  std::vector<Alignment> out;
  const int k = params.seed_length;
  detail::KmerIndex index(reference, k);

  for (const auto& read : reads) {
    if (read.seq.size() < static_cast<std::size_t>(2 * k)) continue;
    const auto* front_hits = index.find(read.seq, 0);
    if (!front_hits) continue;

    std::optional<Alignment> best;
    int best_rank = 1000;  // 0 exact, 1 indel, 2 tolerated substitutions
    auto consider = [&](const Alignment& a, int rank) {
      if (rank < best_rank || (rank == best_rank && best && a.mismatches < best->mismatches)) {
        best = a;
        best_rank = rank;
      }
    };

    int checked = 0;
    for (std::uint32_t pf : *front_hits) {
      if (++checked > params.max_seed_hits) break;
      const std::size_t d = detail::first_divergence(read.seq, reference, pf);
      if (d == read.seq.size()) {
        Alignment a;
        a.read_id = read.id;
        a.pos = pf;
        consider(a, 0);
        break;  // exact placement wins outright
      }
      if (d < static_cast<std::size_t>(k)) continue;

      const std::size_t back_at = read.seq.size() - static_cast<std::size_t>(k);
      const auto* back_hits = index.find(read.seq, back_at);
      if (!back_hits) {
        // No indel candidates; maybe substitutions only.
        int mm = 0;
        if (pf + read.seq.size() <= reference.size()) {
          for (std::size_t i = 0; i < read.seq.size(); ++i) {
            if (read.seq[i] != reference[pf + i]) ++mm;
          }
          if (mm <= static_cast<int>(params.max_mismatch_fraction * read.seq.size())) {
            Alignment a;
            a.read_id = read.id;
            a.pos = pf;
            a.mismatches = mm;
            consider(a, 2);
          }
        }
        continue;
      }

      int back_checked = 0;
      for (std::uint32_t pb : *back_hits) {
        if (++back_checked > params.max_seed_hits) break;
        const long long expected = static_cast<long long>(pf) +
                                   static_cast<long long>(back_at);
        const long long offset = static_cast<long long>(pb) - expected;
        if (offset == 0) {
          int mm = 0;
          for (std::size_t i = 0; i < read.seq.size(); ++i) {
            if (pf + i >= reference.size() || read.seq[i] != reference[pf + i]) ++mm;
          }
          if (mm <= static_cast<int>(params.max_mismatch_fraction * read.seq.size())) {
            Alignment a;
            a.read_id = read.id;
            a.pos = pf;
            a.mismatches = mm;
            consider(a, 2);
          }
        } else if (offset < 0 && -offset <= params.max_indel) {
          // Insertion: `s` read bases consume no reference.
          const std::size_t s = static_cast<std::size_t>(-offset);
          if (d + s <= read.seq.size() &&
              detail::suffix_matches(read.seq, d + s, reference, pf + d)) {
            Alignment a;
            a.read_id = read.id;
            a.pos = pf;
            a.event = 'I';
            a.anchor = pf + d - 1;
            a.inserted = read.seq.substr(d, s);
            consider(a, 1);
          }
        } else if (offset > 0 && offset <= params.max_indel) {
          // Deletion: the reference skips `s` bases at the breakpoint.
          const std::size_t s = static_cast<std::size_t>(offset);
          if (detail::suffix_matches(read.seq, d, reference, pf + d + s)) {
            Alignment a;
            a.read_id = read.id;
            a.pos = pf;
            a.event = 'D';
            a.anchor = pf + d - 1;
            a.deleted_len = s;
            consider(a, 1);
          }
        }
      }
      if (best_rank == 0) break;
    }
    if (best) out.push_back(std::move(*best));
  }
  return out;
}

// Alignment file: one TSV record per read.
inline std::string alignments_to_text(const std::vector<Alignment>& alignments) {
  std::string out;
  for (const auto& a : alignments) {
    out += a.read_id + "\t" + std::to_string(a.pos) + "\t" + a.event + "\t" +
           std::to_string(a.anchor) + "\t" + std::to_string(a.deleted_len) + "\t" +
           (a.inserted.empty() ? "-" : a.inserted) + "\t" + std::to_string(a.mismatches) +
           "\n";
  }
  return out;
}

inline std::vector<Alignment> alignments_from_text(const std::string& text) {
  std::vector<Alignment> out;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 7) throw ConfigError("bad alignment record: " + line);
    Alignment a;
    a.read_id = f[0];
    a.pos = detail::parse_count(f[1], line);
    a.event = f[2].empty() ? 'M' : f[2][0];
    a.anchor = detail::parse_count(f[3], line);
    a.deleted_len = detail::parse_count(f[4], line);
    a.inserted = f[5] == "-" ? "" : f[5];
    a.mismatches = static_cast<int>(detail::parse_count(f[6], line));
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calling.

struct CallerConfig {
  int min_support = 3;
  double min_fraction = 0.1;
  int read_length = 100;
};

inline std::vector<std::uint32_t> coverage_depth(const std::vector<Alignment>& alignments,
                                                 std::size_t ref_len, int read_length) {
  std::vector<std::uint32_t> depth(ref_len, 0);
  for (const auto& a : alignments) {
    std::size_t span = a.ref_span(static_cast<std::size_t>(read_length));
    for (std::size_t p = a.pos; p < std::min(ref_len, a.pos + span); ++p) depth[p]++;
  }
  return depth;
}

// Pileup-threshold indel calling: evidence with at least `min_support` reads
// agreeing on (anchor, event, content) and at least `min_fraction` of the
// local coverage becomes a call.
inline std::set<VariantCall> call_indels(const std::vector<Alignment>& alignments,
                                         const std::string& reference,
                                         const CallerConfig& cfg) {
  struct Key {
    std::size_t anchor;
    char event;
    std::string content;
    bool operator<(const Key& o) const {
      return std::tie(anchor, event, content) < std::tie(o.anchor, o.event, o.content);
    }
  };
  std::map<Key, int> evidence;
  for (const auto& a : alignments) {
    if (a.event == 'I') {
      evidence[Key{a.anchor, 'I', a.inserted}]++;
    } else if (a.event == 'D') {
      evidence[Key{a.anchor, 'D', std::to_string(a.deleted_len)}]++;
    }
  }
  auto depth = coverage_depth(alignments, reference.size(), cfg.read_length);

  std::set<VariantCall> calls;
  for (const auto& [key, count] : evidence) {
    if (count < cfg.min_support) continue;
    if (key.anchor >= reference.size()) continue;
    if (depth[key.anchor] > 0 &&
        count < cfg.min_fraction * static_cast<double>(depth[key.anchor])) {
      continue;
    }
    VariantCall c;
    c.pos = key.anchor;
    if (key.event == 'I') {
      c.ref = reference.substr(key.anchor, 1);
      c.alt = c.ref + key.content;
    } else {
      std::size_t len = detail::parse_count(key.content, key.content);
      if (key.anchor + len + 1 > reference.size()) continue;
      c.ref = reference.substr(key.anchor, len + 1);
      c.alt = reference.substr(key.anchor, 1);
    }
    calls.insert(std::move(c));
  }
  return calls;
}

inline std::set<VariantCall> call_somatic(const std::vector<Alignment>& normal,
                                          const std::vector<Alignment>& tumor,
                                          const std::string& reference,
                                          const CallerConfig& cfg) {
  std::set<VariantCall> n = call_indels(normal, reference, cfg);
  std::set<VariantCall> t = call_indels(tumor, reference, cfg);
  std::set<VariantCall> somatic;
  std::set_difference(t.begin(), t.end(), n.begin(), n.end(),
                      std::inserter(somatic, somatic.end()));
  return somatic;
}

// Call file: POS/REF/ALT, tab-separated.
inline std::string calls_to_text(const std::set<VariantCall>& calls) {
  std::string out;
  for (const auto& c : calls) {
    out += std::to_string(c.pos) + "\t" + c.ref + "\t" + c.alt + "\n";
  }
  return out;
}

inline std::set<VariantCall> calls_from_text(const std::string& text) {
  std::set<VariantCall> out;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) throw ConfigError("bad call record: " + line);
    out.insert(VariantCall{detail::parse_count(f[0], line), f[1], f[2]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Copy-number statistics.

struct Pileup {
  std::vector<std::uint32_t> normal, tumor;

  // tumor/normal coverage ratio; undefined (nullopt) where normal is zero.
  std::optional<double> depth_ratio(std::size_t p) const {
    if (p >= normal.size() || normal[p] == 0) return std::nullopt;
    return static_cast<double>(tumor[p]) / static_cast<double>(normal[p]);
  }
};

inline Pileup make_pileup(const std::vector<Alignment>& normal,
                          const std::vector<Alignment>& tumor, std::size_t ref_len,
                          int read_length) {
  Pileup p;
  p.normal = coverage_depth(normal, ref_len, read_length);
  p.tumor = coverage_depth(tumor, ref_len, read_length);
  return p;
}

// Pileup file: position, normal depth, tumor depth, depth ratio ('.' where
// undefined); one dense row per reference position.
inline std::string pileup_to_text(const Pileup& p) {
  std::string out;
  out.reserve(p.normal.size() * 16);
  for (std::size_t i = 0; i < p.normal.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += std::to_string(p.normal[i]);
    out += '\t';
    out += std::to_string(p.tumor[i]);
    out += '\t';
    auto r = p.depth_ratio(i);
    out += r ? format_fraction(*r) : std::string(".");
    out += '\n';
  }
  return out;
}

struct PileupRow {
  std::size_t pos;
  std::uint32_t normal, tumor;
  std::optional<double> ratio;
};

inline std::vector<PileupRow> pileup_rows_from_text(const std::string& text) {
  std::vector<PileupRow> rows;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 4) throw ConfigError("bad pileup record: " + line);
    PileupRow r;
    r.pos = detail::parse_count(f[0], line);
    r.normal = static_cast<std::uint32_t>(detail::parse_count(f[1], line));
    r.tumor = static_cast<std::uint32_t>(detail::parse_count(f[2], line));
    if (f[3] != ".") {
      try {
        r.ratio = std::stod(f[3]);
      } catch (const std::exception&) {
        throw ConfigError("bad ratio field in pileup record: " + line);
      }
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace metapipe::demo

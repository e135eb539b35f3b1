#pragma once

#include <random>
#include <string>
#include <vector>

#include "metapipe/demo/genome.hpp"

namespace metapipe::demo {

struct Read {
  std::string id;
  std::string seq;
};

// Stratified-uniform read sampling: one read per stratum, jittered inside it.
// Every window of width w receives at least floor(w / stride) - 1 reads, which
// keeps noise-free call support deterministic at the configured coverage.
// Per-base substitution errors at `noise_rate`.
inline std::vector<Read> simulate_reads(const std::string& genome, int read_length,
                                        double coverage, double noise_rate,
                                        std::mt19937_64& rng) {
  std::vector<Read> reads;
  const std::size_t len = static_cast<std::size_t>(read_length);
  if (genome.size() <= len) return reads;
  const std::size_t span = genome.size() - len;
  const std::size_t n = std::max<std::size_t>(
      1, static_cast<std::size_t>(genome.size() * coverage / read_length));
  reads.reserve(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = span * i / n;
    const std::size_t hi = span * (i + 1) / n;
    std::size_t start = lo;
    if (hi > lo) start = lo + rng() % (hi - lo);
    Read r;
    r.id = "r" + std::to_string(i);
    r.seq = genome.substr(start, len);
    if (noise_rate > 0) {
      for (auto& c : r.seq) {
        if (unit(rng) < noise_rate) {
          char repl = detail::random_base(rng);
          while (repl == c) repl = detail::random_base(rng);
          c = repl;
        }
      }
    }
    reads.push_back(std::move(r));
  }
  return reads;
}

// Read file: three lines per record (id, bases, per-base quality flags).
inline std::string reads_to_text(const std::vector<Read>& reads) {
  std::string out;
  for (const auto& r : reads) {
    out += ">" + r.id + "\n" + r.seq + "\n" + std::string(r.seq.size(), '~') + "\n";
  }
  return out;
}

inline std::vector<Read> reads_from_text(const std::string& text) {
  std::vector<Read> reads;
  std::vector<std::string> lines = split(text, '\n');
  for (std::size_t i = 0; i + 1 < lines.size(); i += 3) {
    if (lines[i].empty() || lines[i][0] != '>') continue;
    Read r;
    r.id = lines[i].substr(1);
    r.seq = lines[i + 1];
    reads.push_back(std::move(r));
  }
  return reads;
}

}  // namespace metapipe::demo

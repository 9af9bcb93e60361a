#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace asaprl {

/// Deterministic random stream. All variates are derived from mt19937_64
/// with fixed transformations (no std::*_distribution), so sequences are
/// reproducible across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Independent named child stream: hash-mixes (seed, name, index).
  static Rng substream(uint64_t seed, std::string_view name, uint64_t index = 0);

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);

  /// Standard normal via Box-Muller (uncached; two uniforms per draw).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 gen_;
};

/// FNV-1a over bytes; used for stream derivation and file provenance hashes.
uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace asaprl

#include "asaprl/util/rng.hpp"

#include <cmath>
#include <numbers>

namespace asaprl {

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a(std::string_view s, uint64_t h) { return fnv1a(s.data(), s.size(), h); }

Rng Rng::substream(uint64_t seed, std::string_view name, uint64_t index) {
  uint64_t h = fnv1a(&seed, sizeof(seed));
  h = fnv1a(name, h);
  h = fnv1a(&index, sizeof(index), h);
  return Rng(h);
}

double Rng::uniform() {
  // 53 mantissa bits.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(gen_() % span);
}

double Rng::normal() {
  // Box-Muller, no cached spare: keeps the stream position independent of
  // the mix of uniform/normal draws made so far.
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace asaprl

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace specflow {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a purpose tag.
// Used so e.g. per-scenario, per-epoch and per-probe streams never collide.
inline uint64_t mix_seed(uint64_t base, uint64_t tag) {
  return splitmix64(splitmix64(base) ^ (tag + 0x9e3779b97f4a7c15ULL));
}

// All randomness in the artifact flows through this wrapper. mt19937_64 has
// a standard-pinned output sequence and the double mappings below use fixed
// arithmetic, so every draw is identical across platforms and build flags.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  uint64_t bounded(uint64_t n) {
    uint64_t lim = ~uint64_t{0} - ~uint64_t{0} % n;
    uint64_t x = eng_();
    while (x >= lim) x = eng_();
    return x % n;
  }

  // Box-Muller without caching the paired value: exactly two uniforms per
  // normal keeps the draw count (and thus downstream streams) predictable.
  double normal() {
    double u1 = double((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double rademacher() { return (eng_() >> 63) ? 1.0 : -1.0; }

  // Fisher-Yates; identical result for identical seed and size.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace specflow

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

namespace gp2 {

// Deterministic 64-bit generator used for every random choice in the repo so
// that data generation, training and the ablation are reproducible from a
// single seed. xorshift64* core:
//   x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
// Seeds are passed through splitmix64 (increment 0x9E3779B97F4A7C15, mixers
// 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB) so any seed, including 0, yields a
// healthy nonzero state.
class Rng {
 public:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Independent child seed for a numbered stream (per scene, per cell, ...).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + stream * 0x9E3779B97F4A7C15ULL);
  }

  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // log(sample) uniform in [log lo, log hi]; lo, hi > 0.
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Index in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
  }

  // Marsaglia polar method; consumes pairs of uniforms, caches the spare.
  double gaussian(double sigma = 1.0) {
    if (spare_) {
      double s = *spare_;
      spare_.reset();
      return s * sigma;
    }
    double u, v, q;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    return u * f * sigma;
  }

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

}  // namespace gp2

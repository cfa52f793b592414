#pragma once

#include <cmath>
#include <cstdint>

namespace arl {

/// Deterministic splitmix64 stream. Self-contained so results are
/// bit-reproducible across standard libraries and platforms.
///
/// Substreams: fork(k) derives an independent stream from the *seed
/// identity* of this rng (not from its current position), so forked
/// streams do not depend on how much the parent has already drawn.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}
  Rng(uint64_t seed, uint64_t stream) : Rng(mix(seed ^ golden(stream + 1))) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    const uint64_t bound = n * ((~uint64_t{0}) / n);
    uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return x % n;
  }

  /// Standard normal via Box-Muller (second value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double theta = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Rng fork(uint64_t k) const { return Rng(seed_, k); }

 private:
  static uint64_t golden(uint64_t k) { return k * 0x9E3779B97F4A7C15ull; }

  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  uint64_t seed_;
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace arl

#pragma once

#include <cmath>
#include <cstdint>

namespace ranksens {

/// Deterministic 64-bit generator (splitmix64). Used instead of std::mt19937
/// plus <random> distributions because distribution output is not pinned by
/// the standard; every draw here is a fixed function of the seed, so
/// experiments replay bit-identically on any build of this library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

  /// Independent stream derived from (seed, a, b). Streams with different
  /// keys are decorrelated; the same key always yields the same stream.
  static Rng keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    Rng r(0);
    r.state_ = mix(mix(mix(seed) ^ a) ^ b);
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Unbiased uniform draw in [0, n); n >= 1. Lemire's multiply-shift with
  /// rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exp(1) via inversion; strictly positive.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace ranksens

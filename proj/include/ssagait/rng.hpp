#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ssagait {

/// Counter-based random stream. Draw i of a stream is a pure function of
/// (seed, i): the SplitMix64 finalizer applied to seed + (i + 1) * golden.
/// No platform-dependent distributions are used, so every draw sequence is
/// reproducible bit-for-bit across compilers and standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream identified by `stream_id`. Does not advance
  /// this stream.
  RngStream split(std::uint64_t stream_id) const {
    return RngStream(mix(mix(seed_ ^ 0x5851f42d4c957f2dULL) + mix(stream_id + counter_ * kGolden)));
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace ssagait

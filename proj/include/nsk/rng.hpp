#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace nsk {

/// Counter-based generator: draw n of stream `key` is splitmix64(key + (n+1) * golden).
/// Any draw can be reproduced from (seed, stream id, counter) alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t counter) const { return mix(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL); }
  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per two draws, no cached state).
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream.
  CounterRng split(std::uint64_t id) const { return CounterRng(key_, id + 1); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nsk

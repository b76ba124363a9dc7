#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsenf {

/// Stateless normal variates keyed by (seed, stream, index). Any sample can be
/// regenerated independently, so chunked or reordered generation yields the
/// same stream.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix(seed ^ mix(stream + 0x9e37))) {}

  double operator()(std::uint64_t index) const {
    const std::uint64_t a = mix(key_ ^ (2 * index));
    const std::uint64_t b = mix(key_ ^ (2 * index + 1));
    // 53-bit uniforms; u1 in (0, 1] to keep the log finite.
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace rsenf

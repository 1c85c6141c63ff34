#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "svgtok/hash.hpp"

namespace svgtok {

/// SplitMix64 output function.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream tag, key string, counter), so results do not depend on
/// evaluation order or thread count.
///
///   stream  = sm(sm(sm(seed) ^ fnv1a64(tag)) ^ fnv1a64(key))
///   bits(i) = sm(stream ^ sm(i))
///   u(i)    = ((bits(i) >> 11) + 1) * 2^-53          in (0, 1]
///   normal(2k), normal(2k+1) = Box-Muller on u(2k), u(2k+1)
///
/// where sm is splitmix64.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view tag, std::string_view key)
      : stream_(splitmix64(splitmix64(splitmix64(seed) ^ fnv1a64(tag)) ^ fnv1a64(key))) {}

  std::uint64_t bits(std::uint64_t i) const { return splitmix64(stream_ ^ splitmix64(i)); }
  double uniform(std::uint64_t i) const { return static_cast<double>((bits(i) >> 11) + 1) * 0x1.0p-53; }
  double normal(std::uint64_t i) const {
    const std::uint64_t k = i & ~std::uint64_t{1};
    const double r = std::sqrt(-2.0 * std::log(uniform(k)));
    const double t = 2.0 * std::numbers::pi * uniform(k + 1);
    return (i & 1) ? r * std::sin(t) : r * std::cos(t);
  }

 private:
  std::uint64_t stream_;
};

}  // namespace svgtok

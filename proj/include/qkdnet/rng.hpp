#pragma once

#include <cstdint>
#include <initializer_list>

#include "qkdnet/bits.hpp"

namespace qkdnet {

/// Mixes a 64-bit value (SplitMix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent sub-seed from a master seed and a label path.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels);

/// xoshiro256** with platform-independent derived distributions. The
/// standard library distributions are not reproducible across
/// implementations, so the few we need live here.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [0, bound), rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t bound);
  bool coin() { return (next() >> 63) != 0; }
  std::uint64_t poisson(double lambda);
  BitString bits(std::size_t n);

 private:
  std::uint64_t s_[4];
};

}  // namespace qkdnet

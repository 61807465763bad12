#include "qkdnet/rng.hpp"

#include <cmath>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc908ULL);
  for (auto l : labels) {
    h = mix64(h ^ mix64(l + 0x3c6ef372fe94f82bULL));
  }
  return h;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) {
    x += 0x9e3779b97f4a7c15ULL;
    s = mix64(x);
  }
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("Rng::below: bound must be positive");
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % bound;
}

std::uint64_t Rng::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("Rng::poisson: lambda must be non-negative");
  std::uint64_t total = 0;
  // Knuth's product method, chunked so exp(-chunk) stays well above underflow.
  while (lambda > 0.0) {
    const double chunk = lambda > 32.0 ? 32.0 : lambda;
    lambda -= chunk;
    const double limit = std::exp(-chunk);
    double p = uniform();
    while (p > limit) {
      ++total;
      p *= uniform();
    }
  }
  return total;
}

BitString Rng::bits(std::size_t n) {
  BitString out;
  while (out.size() + 64 <= n) out.append_uint(next(), 64);
  if (out.size() < n) out.append_uint(next() >> (64 - (n - out.size())), n - out.size());
  return out;
}

}  // namespace qkdnet

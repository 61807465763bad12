#include "qkdnet/crypto.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <mutex>

#include "qkdnet/errors.hpp"

#if defined(__x86_64__)
#include <wmmintrin.h>
#endif

namespace qkdnet::crypto {

namespace {

using u128 = unsigned __int128;

u128 clmul_soft(std::uint64_t a, std::uint64_t b) {
  u128 acc = 0;
  while (b != 0) {
    const int i = std::countr_zero(b);
    acc ^= static_cast<u128>(a) << i;
    b &= b - 1;
  }
  return acc;
}

#if defined(__x86_64__)
__attribute__((target("pclmul,sse2"))) u128 clmul_hw(std::uint64_t a, std::uint64_t b) {
  const __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  const __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  const __m128i r = _mm_clmulepi64_si128(va, vb, 0x00);
  const auto lo = static_cast<std::uint64_t>(_mm_cvtsi128_si64(r));
  const auto hi = static_cast<std::uint64_t>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)));
  return (static_cast<u128>(hi) << 64) | lo;
}

bool has_pclmul() {
  static const bool supported = __builtin_cpu_supports("pclmul");
  return supported;
}
#endif

u128 clmul(std::uint64_t a, std::uint64_t b) {
#if defined(__x86_64__)
  if (has_pclmul()) return clmul_hw(a, b);
#endif
  return clmul_soft(a, b);
}

int degree(u128 p) {
  if (p == 0) return -1;
  const auto hi = static_cast<std::uint64_t>(p >> 64);
  if (hi != 0) return 127 - std::countl_zero(hi);
  return 63 - std::countl_zero(static_cast<std::uint64_t>(p));
}

u128 poly_mod(u128 a, u128 f) {
  const int df = degree(f);
  for (int da = degree(a); da >= df; da = degree(a)) {
    a ^= f << (da - df);
  }
  return a;
}

u128 poly_gcd(u128 a, u128 b) {
  while (b != 0) {
    a = poly_mod(a, b);
    std::swap(a, b);
  }
  return a;
}

// Ben-Or: f of degree d is irreducible iff gcd(x^(2^i) - x, f) = 1 for i <= d/2.
bool irreducible(u128 f) {
  const int d = degree(f);
  u128 u = 2;  // x
  for (int i = 1; i <= d / 2; ++i) {
    const auto lo = static_cast<std::uint64_t>(u);
    u = poly_mod(clmul_soft(lo, lo), f);
    if (poly_gcd(f, u ^ 2) != 1) return false;
  }
  return true;
}

std::uint64_t search_modulus(unsigned omega) {
  const u128 top = static_cast<u128>(1) << omega;
  if (omega == 1) return 1;  // x + 1
  for (unsigned a = 1; a < omega; ++a) {
    const std::uint64_t low = (std::uint64_t{1} << a) | 1;
    if (irreducible(top | low)) return low;
  }
  for (unsigned c = 3; c < omega; ++c) {
    for (unsigned b = 2; b < c; ++b) {
      for (unsigned a = 1; a < b; ++a) {
        const std::uint64_t low =
            (std::uint64_t{1} << c) | (std::uint64_t{1} << b) | (std::uint64_t{1} << a) | 1;
        if (irreducible(top | low)) return low;
      }
    }
  }
  throw ParameterError("no low-weight irreducible polynomial found");
}

std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace

std::uint64_t field_modulus(unsigned omega) {
  if (omega == 0 || omega > 64) throw ParameterError("omega must be in [1, 64]");
  static std::array<std::uint64_t, 65> cache{};
  static std::once_flag once;
  std::call_once(once, [] {
    for (unsigned w = 1; w <= 64; ++w) cache[w] = search_modulus(w);
  });
  return cache[omega];
}

std::uint64_t gf_mul(std::uint64_t a, std::uint64_t b, unsigned omega) {
  const std::uint64_t r = field_modulus(omega);
  const std::uint64_t mask = low_mask(omega);
  u128 p = clmul(a & mask, b & mask);
  // Fold x^omega * h into h * r until the product fits in omega bits.
  for (u128 h = p >> omega; h != 0; h = p >> omega) {
    p = (p & mask) ^ clmul(static_cast<std::uint64_t>(h), r);
  }
  return static_cast<std::uint64_t>(p);
}

void HashParams::validate() const {
  if (omega == 0 || omega > 64) throw ParameterError("HashParams: omega must be in [1, 64]");
  if (tag_len == 0 || tag_len > omega) throw ParameterError("HashParams: tag_len must be in [1, omega]");
  if (!(eps_hash > 0.0 && eps_hash < 1.0)) throw ParameterError("HashParams: eps_hash must lie in (0, 1)");
  if (hash_collision_bound(*this, 8) > eps_hash) {
    throw ParameterError("HashParams: eps_hash unreachable with this tag length");
  }
}

double hash_collision_bound(const HashParams& params, std::size_t msg_bits) {
  const double blocks = std::ceil(static_cast<double>(msg_bits) / params.omega) + 2.0;
  return blocks * std::ldexp(1.0, -static_cast<int>(params.tag_len));
}

std::size_t max_message_bits(const HashParams& params) {
  const double max_blocks = std::floor(params.eps_hash * std::ldexp(1.0, static_cast<int>(params.tag_len))) - 2.0;
  if (max_blocks < 1.0) return 0;
  const double bits = max_blocks * params.omega;
  if (bits > 1e18) return std::size_t{1} << 60;
  return static_cast<std::size_t>(bits) / 8 * 8;
}

std::uint64_t asu2_digest(const BitString& key, std::span<const std::uint8_t> msg,
                          const HashParams& params) {
  if (key.size() != params.key_length()) {
    throw ParameterError("asu2_tag: key length does not match the family key length");
  }
  if (msg.empty()) throw ParameterError("asu2_tag: message must be nonempty");
  const std::size_t msg_bits = msg.size() * 8;
  if (msg_bits > max_message_bits(params)) {
    throw ParameterError("asu2_tag: message exceeds the length covered by eps_hash");
  }
  const unsigned w = params.omega;
  const std::uint64_t mask = low_mask(w);
  const std::uint64_t alpha = key.read_uint(0, w);
  const std::uint64_t beta = key.read_uint(w, params.tag_len);

  std::uint64_t acc = gf_mul(1, alpha, w);  // marker block
  const BitString bits = BitString::from_bytes(msg);
  for (std::size_t pos = 0; pos < msg_bits; pos += w) {
    const std::uint64_t block = (bits.window64(pos) >> (64 - w)) & mask;
    acc = gf_mul(acc ^ block, alpha, w);
  }
  acc = gf_mul(acc ^ (static_cast<std::uint64_t>(msg_bits) & mask), alpha, w);
  return (acc >> (w - params.tag_len)) ^ beta;
}

BitString asu2_tag(const BitString& key, std::span<const std::uint8_t> msg, const HashParams& params) {
  return BitString::from_uint(asu2_digest(key, msg, params), params.tag_len);
}

void PaMatrixSeed::validate() const {
  if (m == 0 || n == 0) throw ParameterError("PaMatrixSeed: n and m must be positive");
  if (m > n) throw ParameterError("PaMatrixSeed: output length must not exceed input length");
  if (seed_bits.size() != n + m - 1) throw ParameterError("PaMatrixSeed: seed must have n + m - 1 bits");
}

PaMatrixSeed make_pa_seed(BitString seed_bits, std::size_t n, std::size_t m) {
  PaMatrixSeed s{std::move(seed_bits), n, m};
  s.validate();
  return s;
}

BitString pa_compress(const BitString& raw, const PaMatrixSeed& seed) {
  seed.validate();
  if (raw.size() != seed.n) throw ParameterError("pa_compress: input length mismatch");
  // Row i of the Toeplitz matrix, read left to right, is seed[i .. i+n-1]
  // reversed; dot it with the reversed input instead.
  const BitString rev = raw.reversed();
  const auto rev_words = rev.words();
  BitString out(seed.m);
  for (std::size_t i = 0; i < seed.m; ++i) {
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < rev_words.size(); ++j) {
      acc ^= seed.seed_bits.window64(i + 64 * j) & rev_words[j];
    }
    if (std::popcount(acc) & 1) out.set(i, true);
  }
  return out;
}

Syndrome make_syndrome(const BitString& data, const BitString& synd_seed, std::size_t synd_len) {
  if (synd_len == 0 || synd_len > data.size()) {
    throw ParameterError("make_syndrome: synd_len must be in [1, data length]");
  }
  const PaMatrixSeed seed = make_pa_seed(synd_seed, data.size(), synd_len);
  return Syndrome{pa_compress(data, seed), synd_len, synd_seed};
}

bool check_syndrome(const BitString& data, const Syndrome& syndrome) {
  if (syndrome.value.size() != syndrome.synd_len || syndrome.synd_len == 0 ||
      syndrome.synd_len > data.size() ||
      syndrome.synd_seed.size() != data.size() + syndrome.synd_len - 1) {
    return false;
  }
  const PaMatrixSeed seed{syndrome.synd_seed, data.size(), syndrome.synd_len};
  return pa_compress(data, seed) == syndrome.value;
}

BitString xor_bits(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw ParameterError("xor_bits: length mismatch");
  BitString out = a;
  out ^= b;
  return out;
}

}  // namespace qkdnet::crypto

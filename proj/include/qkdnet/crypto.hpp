#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "qkdnet/bits.hpp"

namespace qkdnet::crypto {

/// Parameters of the polynomial-evaluation ASU2 family.
///
/// A message is split into `omega`-bit blocks, framed by a leading marker
/// block and a trailing length block, and evaluated as a polynomial at the
/// secret point alpha in GF(2^omega). The top `tag_len` bits of the result
/// are masked with the secret pad beta. Two distinct messages of at most L
/// data blocks collide (or substitute) with probability <= (L + 2) / 2^tag_len.
struct HashParams {
  unsigned omega = 63;
  double eps_hash = 1e-12;
  unsigned tag_len = 63;

  /// Bits of key consumed per tag: alpha (omega bits) || beta (tag_len bits).
  std::size_t key_length() const { return std::size_t{omega} + tag_len; }
  /// Throws ParameterError unless the family can tag at least a one-byte message.
  void validate() const;
};

/// Substitution bound of the family for a message of `msg_bits` bits.
double hash_collision_bound(const HashParams& params, std::size_t msg_bits);
/// Longest message (in bits, whole bytes) whose collision bound stays <= eps_hash.
std::size_t max_message_bits(const HashParams& params);

std::uint64_t asu2_digest(const BitString& key, std::span<const std::uint8_t> msg,
                          const HashParams& params);
BitString asu2_tag(const BitString& key, std::span<const std::uint8_t> msg, const HashParams& params);

/// Multiplication in GF(2^omega) under the modulus chosen by field_modulus().
std::uint64_t gf_mul(std::uint64_t a, std::uint64_t b, unsigned omega);
/// Low-weight irreducible modulus of degree omega, x^omega term omitted.
std::uint64_t field_modulus(unsigned omega);

/// Toeplitz matrix description: seed_bits[i - j + n - 1] is entry (i, j).
struct PaMatrixSeed {
  BitString seed_bits;
  std::size_t n = 0;
  std::size_t m = 0;

  void validate() const;
};

PaMatrixSeed make_pa_seed(BitString seed_bits, std::size_t n, std::size_t m);

/// Toeplitz-hash compression of `raw` (n bits) to m bits. Linear over GF(2).
BitString pa_compress(const BitString& raw, const PaMatrixSeed& seed);

struct Syndrome {
  BitString value;
  std::size_t synd_len = 0;
  BitString synd_seed;

  friend bool operator==(const Syndrome&, const Syndrome&) = default;
};

inline constexpr std::size_t kDefaultSyndromeLen = 64;

/// Seeded Toeplitz hash of `data`. The seed must hold data.size() + synd_len - 1 bits.
Syndrome make_syndrome(const BitString& data, const BitString& synd_seed, std::size_t synd_len);
bool check_syndrome(const BitString& data, const Syndrome& syndrome);

BitString xor_bits(const BitString& a, const BitString& b);

}  // namespace qkdnet::crypto

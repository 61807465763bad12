#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdnet {

using Bytes = std::vector<std::uint8_t>;

/// Fixed-length bit string. Bit 0 is the most significant bit of the first
/// byte; serialization is big-endian within bytes.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t nbits);

  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits);
  static BitString from_bytes(std::span<const std::uint8_t> bytes);
  /// Parses a string of '0'/'1' characters.
  static BitString from_binary(std::string_view text);
  static BitString from_uint(std::uint64_t value, std::size_t nbits);

  std::size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (63 - (i & 63))) & 1U;
  }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (63 - (i & 63));
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (63 - (i & 63)); }

  /// Up to 64 bits starting at `pos`, left-aligned (first bit is MSB).
  /// Bits past the end read as zero.
  std::uint64_t window64(std::size_t pos) const;
  /// Reads `len` <= 64 bits starting at `pos` as an unsigned integer.
  std::uint64_t read_uint(std::size_t pos, std::size_t len) const;

  BitString slice(std::size_t pos, std::size_t len) const;
  void append(const BitString& other);
  void append_uint(std::uint64_t value, std::size_t nbits);
  BitString reversed() const;

  bool is_zero() const;
  std::size_t popcount() const;

  BitString& operator^=(const BitString& other);
  friend bool operator==(const BitString& a, const BitString& b) {
    return a.nbits_ == b.nbits_ && a.words_ == b.words_;
  }

  Bytes to_bytes() const;
  std::string to_hex() const;
  std::string to_binary() const;

  std::span<const std::uint64_t> words() const { return words_; }

 private:
  void clear_tail();

  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace qkdnet

#include "qkdnet/bits.hpp"

#include <bit>
#include <stdexcept>

#include "qkdnet/errors.hpp"

namespace qkdnet {

BitString::BitString(std::size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
  if (nbits > bytes.size() * 8) {
    throw ParameterError("from_bytes: not enough bytes for requested bit length");
  }
  BitString out(nbits);
  for (std::size_t i = 0; i < (nbits + 7) / 8; ++i) {
    out.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (56 - 8 * (i % 8));
  }
  out.clear_tail();
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes) {
  return from_bytes(bytes, bytes.size() * 8);
}

BitString BitString::from_binary(std::string_view text) {
  BitString out(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      out.set(i, true);
    } else if (text[i] != '0') {
      throw ParameterError("from_binary: expected only '0' and '1'");
    }
  }
  return out;
}

BitString BitString::from_uint(std::uint64_t value, std::size_t nbits) {
  BitString out;
  out.append_uint(value, nbits);
  return out;
}

std::uint64_t BitString::window64(std::size_t pos) const {
  if (pos >= nbits_) return 0;
  const std::size_t w = pos >> 6;
  const unsigned off = pos & 63;
  std::uint64_t hi = words_[w] << off;
  if (off != 0 && w + 1 < words_.size()) {
    hi |= words_[w + 1] >> (64 - off);
  }
  return hi;
}

std::uint64_t BitString::read_uint(std::size_t pos, std::size_t len) const {
  if (len == 0) return 0;
  if (len > 64 || pos + len > nbits_) {
    throw ParameterError("read_uint: range out of bounds");
  }
  return window64(pos) >> (64 - len);
}

BitString BitString::slice(std::size_t pos, std::size_t len) const {
  if (pos + len > nbits_) {
    throw ParameterError("slice: range out of bounds");
  }
  BitString out(len);
  for (std::size_t i = 0; i < out.words_.size(); ++i) {
    out.words_[i] = window64(pos + 64 * i);
  }
  out.clear_tail();
  return out;
}

void BitString::append(const BitString& other) {
  if (other.nbits_ == 0) return;
  const std::size_t start = nbits_;
  nbits_ += other.nbits_;
  words_.resize((nbits_ + 63) / 64, 0);
  const unsigned off = start & 63;
  std::size_t w = start >> 6;
  for (std::uint64_t word : other.words_) {
    words_[w] |= word >> off;
    if (off != 0 && w + 1 < words_.size()) {
      words_[w + 1] |= word << (64 - off);
    }
    ++w;
  }
  clear_tail();
}

void BitString::append_uint(std::uint64_t value, std::size_t nbits) {
  if (nbits > 64) {
    throw ParameterError("append_uint: at most 64 bits");
  }
  if (nbits == 0) return;
  BitString tmp(nbits);
  tmp.words_[0] = value << (64 - nbits);
  append(tmp);
}

BitString BitString::reversed() const {
  BitString out(nbits_);
  for (std::size_t i = 0; i < nbits_; ++i) {
    if (get(i)) out.set(nbits_ - 1 - i, true);
  }
  return out;
}

bool BitString::is_zero() const {
  for (auto w : words_) {
    if (w != 0) return false;
  }
  return true;
}

std::size_t BitString::popcount() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

BitString& BitString::operator^=(const BitString& other) {
  if (other.nbits_ != nbits_) {
    throw ParameterError("xor: length mismatch");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

Bytes BitString::to_bytes() const {
  Bytes out((nbits_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (56 - 8 * (i % 8)));
  }
  return out;
}

std::string BitString::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto b : to_bytes()) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

std::string BitString::to_binary() const {
  std::string out(nbits_, '0');
  for (std::size_t i = 0; i < nbits_; ++i) {
    if (get(i)) out[i] = '1';
  }
  return out;
}

void BitString::clear_tail() {
  const unsigned rem = nbits_ & 63;
  if (rem != 0 && !words_.empty()) {
    words_.back() &= ~std::uint64_t{0} << (64 - rem);
  }
}

}  // namespace qkdnet

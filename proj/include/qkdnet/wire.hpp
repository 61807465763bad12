#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "qkdnet/bits.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet {

/// Big-endian byte encoder for tagged payloads.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void bits(const BitString& b) {
    u32(static_cast<std::uint32_t>(b.size()));
    const Bytes raw = b.to_bytes();
    out_.insert(out_.end(), raw.begin(), raw.end());
  }
  void bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void tag(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  const Bytes& data() const { return out_; }
  Bytes take() {
    out_.shrink_to_fit();
    return std::move(out_);
  }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  BitString bits() {
    const std::size_t n = u32();
    const std::size_t nbytes = (n + 7) / 8;
    need(nbytes);
    auto b = BitString::from_bytes(in_.subspan(pos_, nbytes), n);
    pos_ += nbytes;
    return b;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ParameterError("ByteReader: truncated input");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace qkdnet

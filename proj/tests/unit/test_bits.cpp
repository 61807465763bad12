#include "doctest.h"

#include "qkdnet/bits.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/rng.hpp"

using qkdnet::BitString;

TEST_CASE("bit order is msb-first within bytes") {
  const std::uint8_t bytes[] = {0x80, 0x01};
  const auto b = BitString::from_bytes(bytes);
  CHECK(b.size() == 16);
  CHECK(b.get(0));
  CHECK(!b.get(1));
  CHECK(b.get(15));
  CHECK(b.to_hex() == "8001");
  CHECK(b.to_binary() == "1000000000000001");
}

TEST_CASE("slice and append round trip across word boundaries") {
  qkdnet::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    const BitString b = rng.bits(n);
    const std::size_t cut = rng.below(n + 1);
    BitString joined = b.slice(0, cut);
    joined.append(b.slice(cut, n - cut));
    CHECK(joined == b);
    for (std::size_t i = 0; i < n; ++i) CHECK(joined.get(i) == b.get(i));
  }
}

TEST_CASE("read_uint and window64") {
  const auto b = BitString::from_binary("1011001110001111");
  CHECK(b.read_uint(0, 4) == 0xB);
  CHECK(b.read_uint(4, 8) == 0x38);
  CHECK(b.read_uint(12, 4) == 0xF);
  CHECK((b.window64(12) >> 60) == 0xF);
  CHECK(b.window64(16) == 0);
  CHECK_THROWS_AS(b.read_uint(10, 10), qkdnet::ParameterError);
}

TEST_CASE("bytes round trip keeps a partial final byte zero padded") {
  const auto b = BitString::from_binary("101");
  const auto bytes = b.to_bytes();
  REQUIRE(bytes.size() == 1);
  CHECK(bytes[0] == 0xA0);
  CHECK(BitString::from_bytes(bytes, 3) == b);
}

TEST_CASE("reverse, popcount, xor") {
  const auto b = BitString::from_binary("1100101");
  CHECK(b.reversed().to_binary() == "1010011");
  CHECK(b.popcount() == 4);
  BitString c = b;
  c ^= b;
  CHECK(c.is_zero());
  CHECK_THROWS_AS(c ^= BitString(3), qkdnet::ParameterError);
}

TEST_CASE("rng is deterministic and poisson moments match") {
  qkdnet::Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  qkdnet::Rng r(1);
  const int windows = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < windows; ++i) {
    const double x = static_cast<double>(r.poisson(1.0));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / windows;
  const double var = sq / windows - mean * mean;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  CHECK(r.poisson(0.0) == 0);
}

TEST_CASE("derive_seed separates labels") {
  CHECK(qkdnet::derive_seed(1, {2, 3}) != qkdnet::derive_seed(1, {3, 2}));
  CHECK(qkdnet::derive_seed(1, {2}) == qkdnet::derive_seed(1, {2}));
}

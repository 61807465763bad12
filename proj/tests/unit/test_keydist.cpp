#include "doctest.h"

#include <map>

#include "qkdnet/crypto.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/keydist.hpp"
#include "qkdnet/keyfabric.hpp"
#include "qkdnet/rng.hpp"

using namespace qkdnet;
using namespace qkdnet::keydist;

namespace {

BitString xor_all(const std::vector<BitString>& v) {
  BitString acc(v.front().size());
  for (const auto& x : v) acc ^= x;
  return acc;
}

// Share travelling along a path: per-hop link keys, one KX per relay.
BitString deliver(const BitString& share, const std::vector<BitString>& hops) {
  std::vector<BitString> kx;
  for (std::size_t h = 1; h < hops.size(); ++h) kx.push_back(relay_kx(0, 0, h, hops[h - 1], hops[h]).bits);
  return unwrap_share(source_combine(share, hops.front(), kx), hops.back());
}

}  // namespace

TEST_CASE("XOR shares reconstruct the secret") {
  Rng rng(1);
  for (std::size_t p = 1; p <= 4; ++p) {
    const BitString s = rng.bits(77);
    const Shares sh = split_shares(s, p, rng, 16);
    REQUIRE(sh.shares.size() == p);
    CHECK(xor_all(sh.shares) == s);
    for (std::size_t i = 0; i < p; ++i) CHECK(crypto::check_syndrome(sh.shares[i], sh.syndromes[i]));
  }
  CHECK_THROWS_AS(split_shares(BitString(8), 0, rng), ParameterError);
}

TEST_CASE("any p-1 shares are independent of the secret") {
  // p = 2 at 8 bits: the first share is uniform whatever the secret is.
  Rng rng(2);
  std::map<std::uint64_t, std::size_t> by_secret[2];
  const BitString secrets[2] = {BitString::from_uint(0x00, 8), BitString::from_uint(0xa5, 8)};
  const int trials = 51200;
  for (int t = 0; t < trials; ++t) {
    for (int s = 0; s < 2; ++s) {
      const Shares sh = split_shares(secrets[s], 2, rng, 4);
      ++by_secret[s][sh.shares[0].read_uint(0, 8)];
    }
  }
  // Each of the 256 values should appear about 200 times for both secrets.
  for (int s = 0; s < 2; ++s) {
    CHECK(by_secret[s].size() == 256);
    double chi2 = 0;
    for (const auto& [v, c] : by_secret[s]) chi2 += (c - 200.0) * (c - 200.0) / 200.0;
    CHECK(chi2 < 330.0);  // 255 dof, p ~ 0.001
  }
}

TEST_CASE("relay KX telescopes to the end pads") {
  Rng rng(3);
  for (std::size_t hops = 1; hops <= 5; ++hops) {
    std::vector<BitString> keys;
    for (std::size_t h = 0; h < hops; ++h) keys.push_back(rng.bits(40));
    const BitString share = rng.bits(40);
    CHECK(deliver(share, keys) == share);

    std::vector<BitString> kx;
    for (std::size_t h = 1; h < hops; ++h) kx.push_back(crypto::xor_bits(keys[h - 1], keys[h]));
    BitString sum(40);
    for (const auto& x : kx) sum ^= x;
    if (hops > 1) CHECK(sum == crypto::xor_bits(keys.front(), keys.back()));
  }
  // Adjacent endpoints: the share travels under the direct link pad.
  const BitString pad = rng.bits(16), share = rng.bits(16);
  CHECK(source_combine(share, pad, {}) == crypto::xor_bits(share, pad));
}

TEST_CASE("reconstruction succeeds on clean paths") {
  Rng rng(4);
  const std::vector<Path> paths{{0, 1, 4}, {0, 2, 4}};
  const BitString s = rng.bits(96);
  const Shares sh = split_shares(s, 2, rng, 32);
  std::vector<std::optional<BitString>> got{sh.shares[0], sh.shares[1]};
  const auto seed = final_pa_seed(9, 1, 96, 32);
  CHECK(seed.m == 64);
  const Reconstruction r = dest_reconstruct(0, 4, paths, got, sh.syndromes, 1, seed);
  REQUIRE(r.success);
  CHECK(r.key->bits == crypto::pa_compress(s, seed));
  CHECK(r.blamed.empty());
  CHECK(r.clean == std::vector<bool>{true, true});
}

TEST_CASE("tampered share fails safely and blames the path") {
  Rng rng(5);
  const std::vector<Path> paths{{0, 1, 4}, {0, 2, 3, 4}};
  const auto seed = final_pa_seed(9, 2, 64, 16);
  std::size_t missed = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const Shares sh = split_shares(rng.bits(64), 2, rng, 16);
    std::vector<std::optional<BitString>> got{sh.shares[0], sh.shares[1]};
    got[1]->flip(rng.below(64));
    const Reconstruction r = dest_reconstruct(0, 4, paths, got, sh.syndromes, 1, seed);
    if (r.success) {
      ++missed;
      continue;
    }
    CHECK_FALSE(r.key.has_value());
    CHECK(r.clean == std::vector<bool>{true, false});
    CHECK(r.blamed == std::vector<NodeId>{2, 3});
  }
  // Single-bit errors escape a 16-bit Toeplitz check only with probability 2^-16.
  CHECK(missed <= 2);

  // Missing share counts as a failed path.
  const Shares sh = split_shares(rng.bits(64), 2, rng, 16);
  std::vector<std::optional<BitString>> got{sh.shares[0], std::nullopt};
  CHECK_FALSE(dest_reconstruct(0, 4, paths, got, sh.syndromes, 1, seed).success);
}

TEST_CASE("extra clean paths absorb one corrupted path") {
  Rng rng(6);
  const std::vector<Path> paths{{0, 1, 4}, {0, 2, 4}, {0, 3, 4}};
  const BitString s = rng.bits(64);
  const Shares sh = split_shares(s, 3, rng, 16);
  std::vector<std::optional<BitString>> got{sh.shares[0], sh.shares[1], sh.shares[2]};
  got[0]->flip(5);
  const auto seed = final_pa_seed(9, 3, 64, 16);
  const Reconstruction r = dest_reconstruct(0, 4, paths, got, sh.syndromes, 1, seed);
  REQUIRE(r.success);
  CHECK(r.blamed == std::vector<NodeId>{1});
  const BitString expect = crypto::xor_bits(sh.shares[1], sh.shares[2]);
  CHECK(r.key->bits == crypto::pa_compress(expect, seed));
  CHECK(combine_clean(sh.shares, r.clean) == expect);
}

TEST_CASE("pads are drawn once per hop and accounted") {
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  KeyFabric fabric(g, 1);
  PadBook book;
  const BitString& a = book.pad(fabric, "d", 0, 0, 0, 0, 40);
  const BitString& b = book.pad(fabric, "d", 0, 0, 0, 0, 40);
  CHECK(&a == &b);
  book.pad(fabric, "d", 0, 0, 1, 1, 40);
  CHECK(fabric.consumed(Category::keydist) == 80);  // share_len x path edges
  CHECK(book.size() == 2);
  book.forget("d");
  CHECK(book.size() == 0);
}

TEST_CASE("public seeds are deterministic") {
  CHECK(final_pa_seed(1, 2, 100, 10).seed_bits == final_pa_seed(1, 2, 100, 10).seed_bits);
  CHECK_FALSE(final_pa_seed(1, 2, 100, 10).seed_bits == final_pa_seed(1, 3, 100, 10).seed_bits);
  CHECK(kx_synd_seed(1, "x", 0, 1, 2, 50, 8) == kx_synd_seed(1, "x", 0, 1, 2, 50, 8));
  CHECK(kx_synd_seed(1, "x", 0, 1, 2, 50, 8).size() == 57);
  CHECK_THROWS(final_pa_seed(1, 2, 10, 10));
}

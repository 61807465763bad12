#pragma once
// One round of raw keys and disclosures on a fixed topology.

#include <vector>

#include "qkdnet/auth.hpp"
#include "qkdnet/keyfabric.hpp"

namespace fixture {

using namespace qkdnet;

// Small hash family so tags and keys fit raw keys of a few dozen bits.
inline auth::AuthConfig small_auth() {
  auth::AuthConfig cfg;
  cfg.hash.omega = 16;
  cfg.hash.tag_len = 8;
  cfg.hash.eps_hash = 0.05;
  cfg.kau_len = 24;
  return cfg;
}

struct Round {
  Graph g;
  KeyFabric fabric;
  auth::AuthConfig cfg;
  std::size_t k;
  std::vector<RawKey> raw;
  std::vector<std::optional<AuthKey>> key;  // empty when the raw key is shorter than kau_len
  std::vector<auth::Disclosure> disc;

  Round(Graph graph, std::size_t k_bits, std::uint64_t seed, auth::AuthConfig c = small_auth(),
        std::uint64_t round = 0)
      : g(std::move(graph)), fabric(g, seed), cfg(c), k(k_bits) {
    for (std::uint64_t r = 0; r <= round; ++r) {
      fabric.open_round(r, std::vector<std::size_t>(fabric.num_links(), k));
    }
    for (NodeId v = 0; v < g.num_vertices(); ++v) {
      raw.push_back(build_raw_key(fabric, v, round, k));
      if (raw.back().bits.size() >= cfg.kau_len) {
        key.push_back(derive_auth_key(raw.back(), cfg.kau_len, pa_round_seed(seed, v, round)));
        disc.push_back(auth::make_disclosure(raw.back(), *key.back()));
      } else {
        key.push_back(std::nullopt);
        disc.push_back(auth::Disclosure{v, round, raw.back().bits, raw.back().segments, {}});
      }
    }
  }

  std::vector<const auth::Disclosure*> pointers() const {
    std::vector<const auth::Disclosure*> out;
    for (const auto& d : disc) out.push_back(&d);
    return out;
  }
  auth::ValidationKeyGraph validation_graph() const {
    const auto ptrs = pointers();
    return auth::build_validation_graph(ptrs, g.num_vertices(), auth::link_ends(fabric));
  }
};

}  // namespace fixture

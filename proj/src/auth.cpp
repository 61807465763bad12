#include "qkdnet/auth.hpp"

#include <algorithm>
#include <map>

#include "qkdnet/errors.hpp"

namespace qkdnet::auth {

void AuthConfig::validate() const {
  hash.validate();
  if (hash.key_length() > kau_len) {
    throw ParameterError("AuthConfig: authentication key shorter than the hash key");
  }
}

bool accept_window_check(std::uint64_t msg_round, std::uint64_t local_round) {
  const std::uint64_t gap = msg_round > local_round ? msg_round - local_round : local_round - msg_round;
  return gap <= 1;
}

BitString make_tag(const AuthKey& key, std::span<const std::uint8_t> payload, const AuthConfig& cfg) {
  return crypto::asu2_tag(key.bits.slice(0, cfg.hash.key_length()), payload, cfg.hash);
}

Disclosure make_disclosure(const RawKey& raw, const AuthKey& key) {
  return Disclosure{raw.node, raw.round, raw.bits, raw.segments, key.pa_seed};
}

bool verify_tuple(const Disclosure& d, std::span<const std::uint8_t> payload, const BitString& tag,
                  const AuthConfig& cfg, const crypto::PaMatrixSeed* expected_seed) {
  if (d.segments.empty() || payload.empty()) return false;
  std::size_t total = 0;
  for (const auto& s : d.segments) {
    if (s.len != d.segments.front().len) return false;
    total += s.len;
  }
  if (total != d.raw_bits.size()) return false;
  const auto& seed = d.pa_seed;
  if (seed.n != d.raw_bits.size() || seed.m != cfg.kau_len || seed.seed_bits.size() != seed.n + seed.m - 1) {
    return false;
  }
  if (expected_seed != nullptr && !(expected_seed->seed_bits == seed.seed_bits)) return false;
  if (tag.size() != cfg.hash.tag_len) return false;
  const BitString key = crypto::pa_compress(d.raw_bits, seed);
  try {
    return crypto::asu2_tag(key.slice(0, cfg.hash.key_length()), payload, cfg.hash) == tag;
  } catch (const ParameterError&) {
    return false;
  }
}

std::vector<NodeId> ValidationKeyGraph::vertices() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < present_.size(); ++v) {
    if (present_[v]) out.push_back(v);
  }
  return out;
}

LinkEnds link_ends(const KeyFabric& fabric) {
  LinkEnds ends;
  ends.reserve(fabric.num_links());
  for (const auto& l : fabric.links()) ends.emplace_back(l.a, l.b);
  return ends;
}

ValidationKeyGraph build_validation_graph(std::span<const Disclosure* const> tuples, std::size_t num_nodes,
                                          const LinkEnds& ends) {
  ValidationKeyGraph g(num_nodes);
  struct Claim {
    NodeId node;
    const Disclosure* d;
    std::size_t pos;  // bit position of the segment inside raw_bits
    const Segment* seg;
  };
  std::map<LinkId, std::vector<Claim>> by_link;
  for (const Disclosure* d : tuples) {
    if (d->sender >= num_nodes) continue;
    g.add_vertex(d->sender);
    std::size_t pos = 0;
    for (const auto& s : d->segments) {
      if (s.link < ends.size()) {
        const auto [a, b] = ends[s.link];
        if (a == d->sender || b == d->sender) by_link[s.link].push_back({d->sender, d, pos, &s});
      }
      pos += s.len;
    }
  }
  for (const auto& [id, claims] : by_link) {
    for (std::size_t i = 0; i < claims.size(); ++i) {
      for (std::size_t j = i + 1; j < claims.size(); ++j) {
        const Claim& x = claims[i];
        const Claim& y = claims[j];
        if (x.node == y.node || x.seg->offset != y.seg->offset) continue;
        const std::size_t len = std::min(x.seg->len, y.seg->len);
        if (len == 0) continue;
        if (x.d->raw_bits.slice(x.pos, len) == y.d->raw_bits.slice(y.pos, len)) g.add_edge(x.node, y.node);
      }
    }
  }
  return g;
}

bool trust_decision(const ValidationKeyGraph& g, NodeId src, NodeId dst, std::size_t f) {
  if (src == dst) return true;
  if (!g.has_vertex(src) || !g.has_vertex(dst)) return false;
  const Graph& gr = g.graph();
  // Direct edge plus common neighbours are already pairwise disjoint paths.
  std::size_t quick = gr.has_edge(src, dst) ? 1 : 0;
  const auto& a = gr.neighbors(src);
  const auto& b = gr.neighbors(dst);
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size() && quick <= f;) {
    if (a[i] == b[j]) {
      ++quick;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  if (quick >= f + 1) return true;
  return count_disjoint_paths(gr, src, dst, f + 1) >= f + 1;
}

}  // namespace qkdnet::auth

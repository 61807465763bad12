#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "qkdnet/bits.hpp"
#include "qkdnet/crypto.hpp"
#include "qkdnet/graph.hpp"
#include "qkdnet/keyfabric.hpp"

namespace qkdnet::auth {

struct AuthedMessage {
  std::uint64_t sn = 0;
  NodeId sender = 0;
  std::uint64_t round = 0;
  std::shared_ptr<const Bytes> payload;
  BitString tag;
};

/// A node's raw key for `round`, published one round later.
struct Disclosure {
  NodeId sender = 0;
  std::uint64_t round = 0;
  BitString raw_bits;
  std::vector<Segment> segments;
  crypto::PaMatrixSeed pa_seed;
};

/// Message authentication settings shared by every node. Tags are keyed by
/// the leading hash.key_length() bits of the kau_len-bit authentication key.
struct AuthConfig {
  crypto::HashParams hash;
  std::size_t kau_len = 256;

  void validate() const;
};

/// Keep iff the message round is within one round of the local clock.
bool accept_window_check(std::uint64_t msg_round, std::uint64_t local_round);

BitString make_tag(const AuthKey& key, std::span<const std::uint8_t> payload, const AuthConfig& cfg);
Disclosure make_disclosure(const RawKey& raw, const AuthKey& key);

/// Re-derives the authentication key from the disclosed raw key and checks
/// the tag. A segment map that does not tile the raw key, segments of unequal
/// length, a PA matrix of the wrong shape or (when given) a matrix other than
/// the published one all make the tuple invalid.
bool verify_tuple(const Disclosure& d, std::span<const std::uint8_t> payload, const BitString& tag,
                  const AuthConfig& cfg, const crypto::PaMatrixSeed* expected_seed = nullptr);

/// Graph over nodes with verified tuples; u and v are joined when both
/// disclosed a segment of the same u-v link at the same stream offset and the
/// bits agree on their common prefix.
class ValidationKeyGraph {
 public:
  explicit ValidationKeyGraph(std::size_t num_nodes) : present_(num_nodes, 0), g_(num_nodes) {}

  void add_vertex(NodeId v) { present_.at(v) = 1; }
  bool has_vertex(NodeId v) const { return v < present_.size() && present_[v]; }
  void add_edge(NodeId u, NodeId v) { g_.add_edge(u, v); }
  const Graph& graph() const { return g_; }
  std::vector<NodeId> vertices() const;

 private:
  std::vector<char> present_;
  Graph g_;
};

using LinkEnds = std::vector<std::pair<NodeId, NodeId>>;
LinkEnds link_ends(const KeyFabric& fabric);

ValidationKeyGraph build_validation_graph(std::span<const Disclosure* const> tuples, std::size_t num_nodes,
                                          const LinkEnds& ends);

/// Trusted iff src and dst are joined by at least f + 1 internally
/// vertex-disjoint paths of the validation graph; src == dst is trusted.
bool trust_decision(const ValidationKeyGraph& g, NodeId src, NodeId dst, std::size_t f);

}  // namespace qkdnet::auth

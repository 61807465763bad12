#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qkdnet/bits.hpp"
#include "qkdnet/crypto.hpp"
#include "qkdnet/graph.hpp"

namespace qkdnet {

using LinkId = std::uint32_t;

/// Where consumed link key goes. Reports break totals down by these.
enum class Category : std::uint8_t { auth = 0, keydist = 1, consensus = 2 };
inline constexpr std::size_t kNumCategories = 3;
const char* category_name(Category c);

struct QkdLink {
  LinkId id = 0;
  NodeId a = 0, b = 0;
  std::array<std::uint8_t, 32> stream_seed{};
  std::uint64_t cursor = 0;    // next unread stream offset
  std::uint64_t consumed = 0;  // bits handed out so far
  bool active = true;

  bool touches(NodeId v) const { return v == a || v == b; }
  NodeId other(NodeId v) const { return v == a ? b : a; }
};

/// Bits [offset, offset + len) of the link's shared stream (ChaCha20 keyed by
/// the link seed). Both endpoints reading the same range see the same bits.
BitString read_stream(const QkdLink& link, std::uint64_t offset, std::size_t len);

struct Segment {
  LinkId link = 0;
  std::uint64_t offset = 0;
  std::uint32_t len = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct RawKey {
  NodeId node = 0;
  std::uint64_t round = 0;
  BitString bits;
  std::vector<Segment> segments;  // ascending link id
};

struct AuthKey {
  NodeId node = 0;
  std::uint64_t round = 0;
  BitString bits;
  crypto::PaMatrixSeed pa_seed;
};

struct SecurityParams {
  double eps_au = 2e-12;     // eps_hash + eps_pa
  double eps_pa = 1e-12;
  double eps_hash = 1e-12;
  std::size_t s = 64;        // privacy amplification margin
  std::size_t kau_len = 256;
  std::size_t f = 0;
  std::size_t C = 1;

  /// Throws ParameterError on bad probabilities or margin and
  /// InfeasibleNetworkError if f exceeds min(C - 1, (N - 1) / 2).
  void validate(std::size_t num_nodes) const;
};

/// Per-link key length for a node of degree x:
/// k = ceil(max(-log2(eps_au) / (C - f), (kau_len + s) / (x - f))).
std::size_t compute_k(const SecurityParams& p, std::size_t x);

/// The set of point-to-point links of a topology, one shared stream each.
class KeyFabric {
 public:
  KeyFabric(const Graph& topology, std::uint64_t master_seed);

  std::size_t num_links() const { return links_.size(); }
  std::size_t num_nodes() const { return node_links_.size(); }
  const QkdLink& link(LinkId id) const { return links_.at(id); }
  const std::vector<QkdLink>& links() const { return links_; }
  /// Active and inactive links of v, ascending id.
  const std::vector<LinkId>& links_of(NodeId v) const { return node_links_.at(v); }
  std::size_t active_degree(NodeId v) const;
  std::optional<LinkId> link_between(NodeId u, NodeId v) const;
  void set_active(LinkId id, bool active);

  /// Next `len` bits of the link stream; advances the cursor and the counters.
  BitString extract_key(LinkId id, std::size_t len, Category cat);

  /// Extracts this round's authentication block on every link with a nonzero
  /// entry in `block_len` (indexed by link id). Rounds must be opened in
  /// increasing order, each at most once.
  void open_round(std::uint64_t round, std::span<const std::size_t> block_len);
  struct Block {
    std::uint64_t offset = 0;
    BitString bits;
  };
  const Block* round_block(LinkId id, std::uint64_t round) const;
  /// Drops cached blocks of rounds before `round`.
  void forget_before(std::uint64_t round);

  std::uint64_t consumed(Category c) const { return per_category_[static_cast<std::size_t>(c)]; }
  std::uint64_t total_consumed() const;
  /// Sum of the per-link counters; always equals total_consumed().
  std::uint64_t link_counter_sum() const;

 private:
  std::vector<QkdLink> links_;
  std::vector<std::vector<LinkId>> node_links_;
  std::map<std::pair<NodeId, NodeId>, LinkId> by_pair_;
  std::map<std::uint64_t, std::vector<std::optional<Block>>> blocks_;
  std::optional<std::uint64_t> last_round_;
  std::array<std::uint64_t, kNumCategories> per_category_{};
};

/// Concatenates the first k bits of node's round block on each active link,
/// in ascending link order. Throws if a block is missing or shorter than k.
RawKey build_raw_key(const KeyFabric& fabric, NodeId node, std::uint64_t round, std::size_t k);

/// Seed from which a node's public per-round PA matrix is drawn.
std::uint64_t pa_round_seed(std::uint64_t run_seed, NodeId node, std::uint64_t round);
/// Toeplitz PA matrix for an n-bit raw key, drawn from `round_seed`.
crypto::PaMatrixSeed pa_seed_for(std::uint64_t round_seed, std::size_t n, std::size_t m);
/// Compresses the raw key to m bits under the published per-round matrix.
AuthKey derive_auth_key(const RawKey& raw, std::size_t m, std::uint64_t round_seed);

}  // namespace qkdnet

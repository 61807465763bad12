#include "qkdnet/keyfabric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <sodium.h>

#include "qkdnet/errors.hpp"
#include "qkdnet/rng.hpp"

namespace qkdnet {

namespace {

constexpr std::uint64_t kLinkSeedLabel = 0x4c494e4b;  // "LINK"
constexpr std::uint64_t kPaSeedLabel = 0x50414d58;    // "PAMX"
constexpr std::size_t kBlockBits = 512;

void ensure_sodium() {
  static const int ok = sodium_init();
  if (ok < 0) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

const char* category_name(Category c) {
  switch (c) {
    case Category::auth:
      return "auth";
    case Category::keydist:
      return "keydist";
    case Category::consensus:
      return "consensus";
  }
  return "?";
}

BitString read_stream(const QkdLink& link, std::uint64_t offset, std::size_t len) {
  if (len == 0) return {};
  ensure_sodium();
  const std::uint64_t first = offset / kBlockBits;
  const std::uint64_t last = (offset + len - 1) / kBlockBits;
  const std::size_t nbytes = static_cast<std::size_t>(last - first + 1) * (kBlockBits / 8);
  Bytes buf(nbytes, 0);
  const std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  crypto_stream_chacha20_xor_ic(buf.data(), buf.data(), buf.size(), nonce, first, link.stream_seed.data());
  return BitString::from_bytes(buf).slice(offset - first * kBlockBits, len);
}

void SecurityParams::validate(std::size_t num_nodes) const {
  for (double p : {eps_au, eps_pa, eps_hash}) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("SecurityParams: probabilities must lie in (0, 1)");
  }
  if (s < 1) throw ParameterError("SecurityParams: s must be at least 1");
  if (kau_len < 1) throw ParameterError("SecurityParams: kau_len must be positive");
  const std::size_t half = num_nodes == 0 ? 0 : (num_nodes - 1) / 2;
  if (C == 0 || f > std::min(C - 1, half)) {
    throw InfeasibleNetworkError("SecurityParams: f must not exceed min(C - 1, (N - 1) / 2)");
  }
}

std::size_t compute_k(const SecurityParams& p, std::size_t x) {
  if (p.C <= p.f) throw InfeasibleNetworkError("compute_k: connectivity must exceed f");
  if (x <= p.f) throw InfeasibleNetworkError("compute_k: node degree must exceed f");
  const double guess = -std::log2(p.eps_au) / static_cast<double>(p.C - p.f);
  const double compress = static_cast<double>(p.kau_len + p.s) / static_cast<double>(x - p.f);
  // Guard against 80.0000000001 style rounding on exact quotients.
  return static_cast<std::size_t>(std::ceil(std::max(guess, compress) - 1e-9));
}

KeyFabric::KeyFabric(const Graph& topology, std::uint64_t master_seed)
    : node_links_(topology.num_vertices()) {
  const auto edges = topology.edges();
  links_.reserve(edges.size());
  for (const auto& [u, v] : edges) {
    QkdLink l;
    l.id = static_cast<LinkId>(links_.size());
    l.a = u;
    l.b = v;
    Rng rng(derive_seed(master_seed, {kLinkSeedLabel, l.id}));
    for (std::size_t i = 0; i < l.stream_seed.size(); i += 8) {
      const std::uint64_t w = rng.next();
      for (std::size_t j = 0; j < 8; ++j) l.stream_seed[i + j] = static_cast<std::uint8_t>(w >> (56 - 8 * j));
    }
    by_pair_[{u, v}] = l.id;
    node_links_[u].push_back(l.id);
    node_links_[v].push_back(l.id);
    links_.push_back(l);
  }
}

std::size_t KeyFabric::active_degree(NodeId v) const {
  std::size_t x = 0;
  for (LinkId id : links_of(v)) x += links_[id].active;
  return x;
}

std::optional<LinkId> KeyFabric::link_between(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  auto it = by_pair_.find({u, v});
  if (it == by_pair_.end()) return std::nullopt;
  return it->second;
}

void KeyFabric::set_active(LinkId id, bool active) { links_.at(id).active = active; }

BitString KeyFabric::extract_key(LinkId id, std::size_t len, Category cat) {
  QkdLink& l = links_.at(id);
  if (!l.active) throw ParameterError("extract_key: link is not active");
  BitString out = read_stream(l, l.cursor, len);
  l.cursor += len;
  l.consumed += len;
  per_category_[static_cast<std::size_t>(cat)] += len;
  return out;
}

void KeyFabric::open_round(std::uint64_t round, std::span<const std::size_t> block_len) {
  if (block_len.size() != links_.size()) throw ParameterError("open_round: one length per link expected");
  if (last_round_ && round <= *last_round_) throw ParameterError("open_round: rounds must strictly increase");
  last_round_ = round;
  auto& blocks = blocks_[round];
  blocks.assign(links_.size(), std::nullopt);
  for (LinkId id = 0; id < links_.size(); ++id) {
    if (block_len[id] == 0 || !links_[id].active) continue;
    const std::uint64_t offset = links_[id].cursor;
    blocks[id] = Block{offset, extract_key(id, block_len[id], Category::consensus)};
  }
}

const KeyFabric::Block* KeyFabric::round_block(LinkId id, std::uint64_t round) const {
  auto it = blocks_.find(round);
  if (it == blocks_.end() || id >= it->second.size() || !it->second[id]) return nullptr;
  return &*it->second[id];
}

void KeyFabric::forget_before(std::uint64_t round) { blocks_.erase(blocks_.begin(), blocks_.lower_bound(round)); }

std::uint64_t KeyFabric::total_consumed() const {
  std::uint64_t t = 0;
  for (auto c : per_category_) t += c;
  return t;
}

std::uint64_t KeyFabric::link_counter_sum() const {
  std::uint64_t t = 0;
  for (const auto& l : links_) t += l.consumed;
  return t;
}

RawKey build_raw_key(const KeyFabric& fabric, NodeId node, std::uint64_t round, std::size_t k) {
  RawKey raw{node, round, {}, {}};
  if (k == 0 || k > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("build_raw_key: bad k");
  for (LinkId id : fabric.links_of(node)) {
    if (!fabric.link(id).active) continue;
    const auto* block = fabric.round_block(id, round);
    if (block == nullptr || block->bits.size() < k) {
      throw ParameterError("build_raw_key: round block missing or shorter than k");
    }
    raw.bits.append(block->bits.slice(0, k));
    raw.segments.push_back({id, block->offset, static_cast<std::uint32_t>(k)});
  }
  if (raw.segments.empty()) throw ParameterError("build_raw_key: node has no active link");
  return raw;
}

std::uint64_t pa_round_seed(std::uint64_t run_seed, NodeId node, std::uint64_t round) {
  return derive_seed(run_seed, {kPaSeedLabel, node, round});
}

crypto::PaMatrixSeed pa_seed_for(std::uint64_t round_seed, std::size_t n, std::size_t m) {
  Rng rng(round_seed);
  return crypto::make_pa_seed(rng.bits(n + m - 1), n, m);
}

AuthKey derive_auth_key(const RawKey& raw, std::size_t m, std::uint64_t round_seed) {
  if (m == 0 || m > raw.bits.size()) throw ParameterError("derive_auth_key: m must be in [1, raw length]");
  auto seed = pa_seed_for(round_seed, raw.bits.size(), m);
  BitString bits = crypto::pa_compress(raw.bits, seed);
  return AuthKey{raw.node, raw.round, std::move(bits), std::move(seed)};
}

}  // namespace qkdnet

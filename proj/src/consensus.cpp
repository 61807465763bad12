#include "qkdnet/consensus.hpp"

#include <algorithm>

#include <sodium.h>

#include "qkdnet/errors.hpp"
#include "qkdnet/wire.hpp"

namespace qkdnet::consensus {

Bytes Proposal::encode() const {
  ByteWriter w;
  w.tag("PROP");
  w.u64(view);
  w.u64(bundle);
  w.u32(leader);
  w.u32(static_cast<std::uint32_t>(schemes.size()));
  for (const auto& s : schemes) {
    w.u64(s.req_id);
    w.u32(s.src);
    w.u32(s.dst);
    w.u32(static_cast<std::uint32_t>(s.paths.size()));
    for (const auto& p : s.paths) {
      w.u32(static_cast<std::uint32_t>(p.size()));
      for (NodeId v : p) w.u32(v);
    }
    w.u32(static_cast<std::uint32_t>(s.share_len.size()));
    for (auto l : s.share_len) w.u32(l);
    w.u32(static_cast<std::uint32_t>(s.share_synd.size()));
    for (const auto& b : s.share_synd) w.bits(b);
  }
  return w.take();
}

std::string Proposal::digest() const {
  const Bytes bytes = encode();
  std::string out(32, '\0');
  crypto_generichash(reinterpret_cast<unsigned char*>(out.data()), out.size(), bytes.data(), bytes.size(), nullptr,
                     0);
  return out;
}

std::set<NodeId> Proposal::relays() const {
  std::set<NodeId> out;
  for (const auto& s : schemes) {
    for (const auto& p : s.paths) {
      for (std::size_t i = 1; i + 1 < p.size(); ++i) out.insert(p[i]);
    }
  }
  return out;
}

std::optional<std::string> check_scheme(const SchemeSpec& s, const Graph& topology, std::size_t f) {
  const std::size_t n = topology.num_vertices();
  if (s.src >= n || s.dst >= n || s.src == s.dst) return "bad endpoints";
  if (s.paths.size() < f + 1) return "fewer than f+1 paths";
  if (s.share_len.size() != s.paths.size() || s.share_synd.size() != s.paths.size()) {
    return "per-path fields do not match the path count";
  }
  for (auto l : s.share_len) {
    if (l == 0 || l != s.share_len.front()) return "unequal path key lengths";
  }
  for (const auto& p : s.paths) {
    if (p.size() < 2 || p.front() != s.src || p.back() != s.dst) return "path does not join src and dst";
    std::set<NodeId> seen(p.begin(), p.end());
    if (seen.size() != p.size()) return "path repeats a node";
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      if (p[i] >= n || p[i + 1] >= n || !topology.has_edge(p[i], p[i + 1])) return "path uses a missing link";
    }
  }
  if (!paths_internally_disjoint(s.paths)) return "paths are not internally disjoint";
  return std::nullopt;
}

std::optional<std::string> check_legitimacy(const Proposal& p, const Graph& topology, std::size_t f,
                                            const std::map<std::uint64_t, RequestInfo>* pending) {
  std::set<std::uint64_t> ids;
  for (const auto& s : p.schemes) {
    if (!ids.insert(s.req_id).second) return "request proposed twice";
    if (auto why = check_scheme(s, topology, f)) return why;
    if (pending != nullptr) {
      auto it = pending->find(s.req_id);
      if (it == pending->end()) return "unknown request";
      const RequestInfo& r = it->second;
      if (r.src != s.src || r.dst != s.dst || r.share_synd != s.share_synd || r.share_len != s.share_len.front()) {
        return "scheme does not match the request";
      }
    }
  }
  return std::nullopt;
}

const std::optional<std::vector<Path>>& PathPlanner::plan(NodeId src, NodeId dst) {
  auto it = cache_.find({src, dst});
  if (it != cache_.end()) return it->second;
  return cache_[{src, dst}] = shortest_disjoint_paths(g_, src, dst, paths_);
}

BuildResult propose(std::uint64_t view, NodeId leader, std::span<const RequestInfo> pending, PathPlanner& planner) {
  BuildResult out;
  out.proposal.view = view;
  out.proposal.bundle = view;
  out.proposal.leader = leader;
  std::vector<const RequestInfo*> order;
  for (const auto& r : pending) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->req_id < b->req_id; });
  for (const RequestInfo* r : order) {
    const auto& paths = planner.plan(r->src, r->dst);
    if (!paths || r->share_synd.size() != paths->size()) {
      out.excluded.push_back(r->req_id);
      continue;
    }
    SchemeSpec s;
    s.req_id = r->req_id;
    s.src = r->src;
    s.dst = r->dst;
    s.paths = *paths;
    s.share_len.assign(paths->size(), r->share_len);
    s.share_synd = r->share_synd;
    out.proposal.schemes.push_back(std::move(s));
  }
  return out;
}

std::uint64_t crs_mod(std::span<const BitString> raw_keys, std::uint64_t n) {
  if (n == 0) throw ParameterError("crs_mod: modulus must be positive");
  if (raw_keys.empty()) throw ParameterError("crs_mod: no raw keys");
  std::size_t len = raw_keys.front().size();
  for (const auto& k : raw_keys) len = std::min(len, k.size());
  BitString crs = raw_keys.front().slice(0, len);
  for (std::size_t i = 1; i < raw_keys.size(); ++i) crs ^= raw_keys[i].slice(0, len);
  unsigned __int128 r = 0;
  for (std::size_t i = 0; i < len; ++i) r = ((r << 1) | crs.get(i)) % n;
  return static_cast<std::uint64_t>(r);
}

NodeId elect_leader(std::span<const BitString> voter_raw_keys, std::size_t n, std::uint64_t failed_since) {
  const std::uint64_t crs = crs_mod(voter_raw_keys, n);
  return static_cast<NodeId>((crs + failed_since % n) % n);
}

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::equivocation:
      return "equivocation";
    case Trigger::leader_timeout:
      return "leader_timeout";
    case Trigger::verify_failure:
      return "verify_failure";
  }
  return "?";
}

CommitDecision try_commit(bool proposal_confirmed, bool equivocation, const std::set<NodeId>& relays,
                          const std::set<NodeId>& voters, std::size_t f) {
  if (equivocation) return CommitDecision::view_change;
  if (!proposal_confirmed) return CommitDecision::pending;
  if (voters.size() < f + 1) return CommitDecision::pending;
  for (NodeId r : relays) {
    if (!voters.count(r)) return CommitDecision::pending;
  }
  return CommitDecision::arm;
}

std::set<NodeId> ViewState::voters() const {
  std::set<NodeId> out;
  for (const auto& [v, k] : voter_keys) out.insert(v);
  return out;
}

}  // namespace qkdnet::consensus

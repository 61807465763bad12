#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qkdnet/errors.hpp"
#include "qkdnet/graph.hpp"

namespace qkdnet::simnet {

struct Topology {
  std::size_t N = 0;
  Graph graph;
  std::size_t C = 0;
};

/// Random topology family. "geometric": points on the unit torus joined
/// within `radius`; "erdos_renyi": independent edges with `edge_prob`.
/// Either way nodes below degree f+1 get their nearest (or random) missing
/// links added, graphs with connectivity <= f are resampled, and after
/// `max_attempts` the nearest missing links are added until it holds.
struct SamplerConfig {
  std::string kind = "geometric";
  double radius = 0.57;
  double edge_prob = 0.3;
  int max_attempts = 200;
};

Topology gen_topology(std::size_t N, std::size_t f, std::uint64_t seed, const SamplerConfig& cfg = {});
Topology make_topology(Graph g);
std::size_t node_connectivity(const Topology& t);

struct RoundClock {
  std::uint64_t round = 0;
  double delta = 1.0;  // seconds per round, for reporting only
  double seconds() const { return static_cast<double>(round) * delta; }
  void tick() { ++round; }
};

struct RequestStream {
  double lambda = 1.0;  // mean requests per ordered pair per window
  std::uint64_t seed = 0;
};

/// Requests from pair.first to pair.second in `window`; a pure function of
/// (stream, pair, window).
std::uint64_t poisson_arrivals(const RequestStream& s, std::pair<NodeId, NodeId> pair, std::uint64_t window);

class SynchronyViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Lock-step broadcast. A message sent in round r is delivered at round r+1.
/// Honest senders always reach every node; coalition members may restrict
/// the recipients of their own messages.
template <class Msg>
class Network {
 public:
  using Ptr = std::shared_ptr<const Msg>;

  Network(std::size_t n, std::set<NodeId> coalition) : n_(n), coalition_(std::move(coalition)) {}

  /// Returns the number of deliveries scheduled (self-delivery included).
  std::size_t broadcast(NodeId sender, std::uint64_t round, Ptr msg,
                        const std::optional<std::vector<NodeId>>& recipients = std::nullopt) {
    auto& inbox = pending_[round + 1];
    if (inbox.empty()) inbox.resize(n_);
    if (!recipients) {
      for (NodeId v = 0; v < n_; ++v) inbox[v].push_back(msg);
      return n_;
    }
    std::set<NodeId> chosen(recipients->begin(), recipients->end());
    if (!coalition_.count(sender) && chosen.size() != n_) {
      throw SynchronyViolation("an honest broadcast must reach every node");
    }
    for (NodeId v : chosen) {
      if (v < n_) inbox[v].push_back(msg);
    }
    return chosen.size();
  }

  /// Messages for `to` that are due in `round`, in sending order.
  std::vector<Ptr> deliver(NodeId to, std::uint64_t round) const {
    auto it = pending_.find(round);
    if (it == pending_.end() || it->second.empty()) return {};
    return it->second[to];
  }

  void forget_before(std::uint64_t round) { pending_.erase(pending_.begin(), pending_.lower_bound(round)); }
  bool is_coalition(NodeId v) const { return coalition_.count(v) != 0; }
  const std::set<NodeId>& coalition() const { return coalition_; }

 private:
  std::size_t n_;
  std::set<NodeId> coalition_;
  std::map<std::uint64_t, std::vector<std::vector<Ptr>>> pending_;
};

}  // namespace qkdnet::simnet

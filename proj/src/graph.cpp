#include "qkdnet/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

#include "qkdnet/errors.hpp"

namespace qkdnet {

bool Graph::add_edge(NodeId u, NodeId v) {
  if (u == v || u >= adj_.size() || v >= adj_.size()) return false;
  auto& au = adj_[u];
  auto it = std::lower_bound(au.begin(), au.end(), v);
  if (it != au.end() && *it == v) return false;
  au.insert(it, v);
  auto& av = adj_[v];
  av.insert(std::lower_bound(av.begin(), av.end(), u), u);
  ++num_edges_;
  return true;
}

bool Graph::remove_edge(NodeId u, NodeId v) {
  if (!has_edge(u, v)) return false;
  auto& au = adj_[u];
  au.erase(std::lower_bound(au.begin(), au.end(), v));
  auto& av = adj_[v];
  av.erase(std::lower_bound(av.begin(), av.end(), u));
  --num_edges_;
  return true;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= adj_.size() || v >= adj_.size()) return false;
  return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges_);
  for (NodeId u = 0; u < adj_.size(); ++u) {
    for (NodeId v : adj_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

bool Graph::connected() const {
  if (adj_.empty()) return true;
  std::vector<char> seen(adj_.size(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == adj_.size();
}

namespace {

// Vertex-split residual network: vertex v becomes in(v)=2v -> out(v)=2v+1.
class SplitNetwork {
 public:
  SplitNetwork(const Graph& g, NodeId src, NodeId dst) : head_(2 * g.num_vertices(), -1) {
    for (NodeId v = 0; v < g.num_vertices(); ++v) {
      if (v != src && v != dst) add_arc(2 * v, 2 * v + 1, 1, 0);
    }
    for (auto [u, v] : g.edges()) {
      add_arc(2 * u + 1, 2 * v, 1, 1);
      add_arc(2 * v + 1, 2 * u, 1, 1);
    }
    source_ = 2 * src + 1;
    sink_ = 2 * dst;
  }

  bool augment_bfs() {
    std::vector<int> via(head_.size(), -1);
    std::vector<char> seen(head_.size(), 0);
    std::deque<int> q{source_};
    seen[source_] = 1;
    while (!q.empty() && !seen[sink_]) {
      const int u = q.front();
      q.pop_front();
      for (int a = head_[u]; a != -1; a = next_[a]) {
        const int v = to_[a];
        if (cap_[a] > 0 && !seen[v]) {
          seen[v] = 1;
          via[v] = a;
          q.push_back(v);
        }
      }
    }
    if (!seen[sink_]) return false;
    push_along(via);
    return true;
  }

  bool augment_cheapest() {
    constexpr long kInf = std::numeric_limits<long>::max() / 4;
    std::vector<long> dist(head_.size(), kInf);
    std::vector<int> via(head_.size(), -1);
    std::vector<char> queued(head_.size(), 0);
    std::deque<int> q{source_};
    dist[source_] = 0;
    queued[source_] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      queued[u] = 0;
      for (int a = head_[u]; a != -1; a = next_[a]) {
        const int v = to_[a];
        if (cap_[a] > 0 && dist[u] + cost_[a] < dist[v]) {
          dist[v] = dist[u] + cost_[a];
          via[v] = a;
          if (!queued[v]) {
            queued[v] = 1;
            q.push_back(v);
          }
        }
      }
    }
    if (dist[sink_] == kInf) return false;
    push_along(via);
    return true;
  }

  std::vector<Path> decompose(std::size_t flow) {
    std::vector<Path> paths;
    for (std::size_t k = 0; k < flow; ++k) {
      Path p{static_cast<NodeId>(source_ / 2)};
      int u = source_;
      while (u != sink_) {
        int chosen = -1;
        for (int a = head_[u]; a != -1; a = next_[a]) {
          if ((a & 1) == 0 && cap_[a] == 0 && used_[a] == 0) {
            chosen = a;
            break;
          }
        }
        used_[chosen] = 1;
        const int v = to_[chosen];
        if (v % 2 == 0) {
          p.push_back(static_cast<NodeId>(v / 2));
          u = (v == sink_) ? sink_ : v + 1;
          if (v != sink_) {
            // Mark the split arc in(v)->out(v) as traversed.
            for (int a = head_[v]; a != -1; a = next_[a]) {
              if (to_[a] == v + 1 && (a & 1) == 0) used_[a] = 1;
            }
          }
        } else {
          u = v;
        }
      }
      paths.push_back(std::move(p));
    }
    return paths;
  }

 private:
  void add_arc(int u, int v, int cap, int cost) {
    for (auto [from, to, c, w] : {std::tuple{u, v, cap, cost}, std::tuple{v, u, 0, -cost}}) {
      to_.push_back(to);
      cap_.push_back(c);
      cost_.push_back(w);
      used_.push_back(0);
      next_.push_back(head_[from]);
      head_[from] = static_cast<int>(to_.size()) - 1;
    }
  }

  void push_along(const std::vector<int>& via) {
    for (int v = sink_; v != source_;) {
      const int a = via[v];
      cap_[a] -= 1;
      cap_[a ^ 1] += 1;
      v = to_[a ^ 1];
    }
  }

  std::vector<int> head_, next_, to_, cap_, cost_;
  std::vector<char> used_;
  int source_ = 0;
  int sink_ = 0;
};

void check_endpoints(const Graph& g, NodeId src, NodeId dst) {
  if (src >= g.num_vertices() || dst >= g.num_vertices()) {
    throw ParameterError("disjoint paths: vertex out of range");
  }
  if (src == dst) throw ParameterError("disjoint paths: src and dst must differ");
}

}  // namespace

std::size_t count_disjoint_paths(const Graph& g, NodeId src, NodeId dst, std::size_t cap) {
  check_endpoints(g, src, dst);
  SplitNetwork net(g, src, dst);
  std::size_t flow = 0;
  while (flow < cap && net.augment_bfs()) ++flow;
  return flow;
}

std::optional<std::vector<Path>> shortest_disjoint_paths(const Graph& g, NodeId src, NodeId dst,
                                                         std::size_t want) {
  check_endpoints(g, src, dst);
  SplitNetwork net(g, src, dst);
  for (std::size_t k = 0; k < want; ++k) {
    if (!net.augment_cheapest()) return std::nullopt;
  }
  auto paths = net.decompose(want);
  std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return paths;
}

std::size_t node_connectivity(const Graph& g) {
  const std::size_t n = g.num_vertices();
  if (n <= 1) return 0;
  if (!g.connected()) return 0;
  // Esfahanian-Hakimi: with v of minimum degree, a minimum separator either
  // misses v (witnessed by some non-neighbour w) or contains v (witnessed by
  // two non-adjacent neighbours of v).
  NodeId v = 0;
  for (NodeId u = 1; u < n; ++u) {
    if (g.degree(u) < g.degree(v)) v = u;
  }
  std::size_t best = g.degree(v);
  for (NodeId w = 0; w < n && best > 0; ++w) {
    if (w != v && !g.has_edge(v, w)) {
      best = std::min(best, count_disjoint_paths(g, v, w, best));
    }
  }
  const auto& nb = g.neighbors(v);
  for (std::size_t i = 0; i < nb.size(); ++i) {
    for (std::size_t j = i + 1; j < nb.size(); ++j) {
      if (!g.has_edge(nb[i], nb[j])) {
        best = std::min(best, count_disjoint_paths(g, nb[i], nb[j], best));
      }
    }
  }
  return best;
}

bool paths_internally_disjoint(const std::vector<Path>& paths) {
  std::set<NodeId> seen;
  bool direct_seen = false;
  for (const auto& p : paths) {
    if (p.size() < 2) return false;
    if (p.size() == 2) {
      if (direct_seen) return false;
      direct_seen = true;
    }
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      if (!seen.insert(p[i]).second) return false;
    }
  }
  return true;
}

}  // namespace qkdnet

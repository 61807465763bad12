#pragma once
// Brute-force reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <vector>

#include "qkdnet/bits.hpp"
#include "qkdnet/graph.hpp"

namespace oracle {

using qkdnet::Graph;
using qkdnet::NodeId;
using qkdnet::Path;

// Entry (i, j) of the Toeplitz matrix is seed[i - j + n - 1].
inline qkdnet::BitString dense_toeplitz(const qkdnet::BitString& raw, const qkdnet::BitString& seed, std::size_t m) {
  const std::size_t n = raw.size();
  qkdnet::BitString out(m);
  for (std::size_t i = 0; i < m; ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < n; ++j) acc ^= seed.get(i + n - 1 - j) && raw.get(j);
    out.set(i, acc);
  }
  return out;
}

inline bool connected_without(const Graph& g, std::uint32_t removed_mask) {
  const std::size_t n = g.num_vertices();
  int start = -1, alive = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!(removed_mask >> v & 1)) {
      ++alive;
      if (start < 0) start = static_cast<int>(v);
    }
  }
  if (alive <= 1) return true;
  std::uint32_t seen = 1u << start;
  std::vector<NodeId> stack{static_cast<NodeId>(start)};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w : g.neighbors(u)) {
      if (!(removed_mask >> w & 1) && !(seen >> w & 1)) {
        seen |= 1u << w;
        stack.push_back(w);
      }
    }
  }
  return std::popcount(seen) == alive;
}

/// Smallest vertex set whose removal disconnects g (n-1 for complete graphs).
inline std::size_t connectivity_by_cuts(const Graph& g) {
  const std::size_t n = g.num_vertices();
  if (n <= 1) return 0;
  if (!connected_without(g, 0)) return 0;
  std::size_t best = n - 1;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const std::size_t size = std::popcount(mask);
    if (size >= best || n - size < 2) continue;
    if (!connected_without(g, mask)) best = size;
  }
  return best;
}

inline std::vector<Path> simple_paths(const Graph& g, NodeId src, NodeId dst) {
  std::vector<Path> out;
  Path cur{src};
  std::uint32_t used = 1u << src;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    for (NodeId w : g.neighbors(u)) {
      if (used >> w & 1) continue;
      cur.push_back(w);
      if (w == dst) {
        out.push_back(cur);
      } else {
        used |= 1u << w;
        dfs(w);
        used &= ~(1u << w);
      }
      cur.pop_back();
    }
  };
  dfs(src);
  return out;
}

/// Maximum number of pairwise internally disjoint src-dst paths, by search
/// over all simple paths.
inline std::size_t max_disjoint_paths(const Graph& g, NodeId src, NodeId dst) {
  const auto paths = simple_paths(g, src, dst);
  std::vector<std::uint32_t> interior;
  for (const auto& p : paths) {
    std::uint32_t m = 0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) m |= 1u << p[i];
    interior.push_back(m);
  }
  std::size_t best = 0;
  std::function<void(std::size_t, std::uint32_t, std::size_t)> go = [&](std::size_t i, std::uint32_t used,
                                                                        std::size_t count) {
    best = std::max(best, count);
    if (count + (paths.size() - i) <= best) return;
    for (std::size_t j = i; j < paths.size(); ++j) {
      // The direct edge has an empty interior and may appear only once anyway.
      if ((interior[j] & used) == 0) go(j + 1, used | interior[j], count + 1);
    }
  };
  go(0, 0, 0);
  return best;
}

/// Graph with vertices 0..n-1 whose edges are the set bits of `mask`, in
/// (0,1),(0,2),...,(n-2,n-1) order.
inline Graph graph_from_mask(std::size_t n, std::uint32_t mask) {
  Graph g(n);
  std::size_t bit = 0;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v, ++bit) {
      if (mask >> bit & 1) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace oracle

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace qkdnet {

using NodeId = std::uint32_t;
using Path = std::vector<NodeId>;

/// Simple undirected graph on vertices 0..n-1 with sorted adjacency lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : adj_(n) {}

  std::size_t num_vertices() const { return adj_.size(); }
  std::size_t num_edges() const { return num_edges_; }

  /// Returns false for self-loops and existing edges.
  bool add_edge(NodeId u, NodeId v);
  bool remove_edge(NodeId u, NodeId v);
  bool has_edge(NodeId u, NodeId v) const;
  const std::vector<NodeId>& neighbors(NodeId v) const { return adj_[v]; }
  std::size_t degree(NodeId v) const { return adj_[v].size(); }

  std::vector<std::pair<NodeId, NodeId>> edges() const;
  bool connected() const;

 private:
  std::vector<std::vector<NodeId>> adj_;
  std::size_t num_edges_ = 0;
};

/// Maximum number of internally vertex-disjoint src-dst paths, stopping
/// early once `cap` is reached. A direct edge counts as one path.
std::size_t count_disjoint_paths(const Graph& g, NodeId src, NodeId dst,
                                 std::size_t cap = static_cast<std::size_t>(-1));

/// `want` internally vertex-disjoint src-dst paths of minimum total length
/// (min-cost flow on the vertex-split graph); nullopt if fewer exist.
/// Paths are returned sorted by (length, lexicographic node order).
std::optional<std::vector<Path>> shortest_disjoint_paths(const Graph& g, NodeId src, NodeId dst,
                                                         std::size_t want);

/// Vertex connectivity; n-1 for complete graphs, 0 for disconnected ones.
std::size_t node_connectivity(const Graph& g);

bool paths_internally_disjoint(const std::vector<Path>& paths);

}  // namespace qkdnet

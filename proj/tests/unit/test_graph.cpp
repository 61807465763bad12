#include "doctest.h"

#include "../common/oracles.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/graph.hpp"
#include "qkdnet/rng.hpp"

using namespace qkdnet;

namespace {

Graph cycle(std::size_t n) {
  Graph g(n);
  for (NodeId v = 0; v < n; ++v) g.add_edge(v, static_cast<NodeId>((v + 1) % n));
  return g;
}

Graph complete(std::size_t n) {
  Graph g(n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

}  // namespace

TEST_CASE("graph edges are simple") {
  Graph g(3);
  CHECK(g.add_edge(0, 1));
  CHECK(!g.add_edge(1, 0));
  CHECK(!g.add_edge(2, 2));
  CHECK(g.num_edges() == 1);
  CHECK(g.remove_edge(1, 0));
  CHECK(g.num_edges() == 0);
}

TEST_CASE("known connectivities") {
  CHECK(node_connectivity(cycle(5)) == 2);
  CHECK(node_connectivity(complete(4)) == 3);
  Graph two(2);
  two.add_edge(0, 1);
  CHECK(node_connectivity(two) == 1);
  Graph split(4);
  split.add_edge(0, 1);
  split.add_edge(2, 3);
  CHECK(node_connectivity(split) == 0);
}

TEST_CASE("connectivity matches vertex-cut enumeration on random small graphs") {
  Rng rng(21);
  for (int t = 0; t < 400; ++t) {
    const std::size_t n = 2 + rng.below(6);
    const std::uint32_t mask = static_cast<std::uint32_t>(rng.next()) & ((1u << (n * (n - 1) / 2)) - 1);
    const Graph g = oracle::graph_from_mask(n, mask);
    CHECK(node_connectivity(g) == oracle::connectivity_by_cuts(g));
  }
}

TEST_CASE("disjoint path counts match exhaustive enumeration") {
  Rng rng(22);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 3 + rng.below(4);
    const std::uint32_t mask = static_cast<std::uint32_t>(rng.next()) & ((1u << (n * (n - 1) / 2)) - 1);
    const Graph g = oracle::graph_from_mask(n, mask);
    const NodeId s = static_cast<NodeId>(rng.below(n));
    NodeId d = static_cast<NodeId>(rng.below(n - 1));
    if (d >= s) ++d;
    const std::size_t want = oracle::max_disjoint_paths(g, s, d);
    CHECK(count_disjoint_paths(g, s, d) == want);
    if (want > 0) {
      const auto paths = shortest_disjoint_paths(g, s, d, want);
      REQUIRE(paths.has_value());
      CHECK(paths->size() == want);
      CHECK(paths_internally_disjoint(*paths));
      for (const auto& p : *paths) {
        CHECK(p.front() == s);
        CHECK(p.back() == d);
        for (std::size_t i = 0; i + 1 < p.size(); ++i) CHECK(g.has_edge(p[i], p[i + 1]));
      }
    }
    CHECK(!shortest_disjoint_paths(g, s, d, want + 1).has_value());
  }
}

TEST_CASE("shortest disjoint paths minimize total length") {
  // Square 0-1-2-3-0 plus a long detour 0-4-5-6-2 and chord 0-2.
  Graph g(7);
  for (auto [u, v] : {std::pair{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {4, 5}, {5, 6}, {6, 2}, {0, 2}}) {
    g.add_edge(u, v);
  }
  const auto paths = shortest_disjoint_paths(g, 0, 2, 3);
  REQUIRE(paths.has_value());
  CHECK((*paths)[0] == Path{0, 2});
  CHECK((*paths)[1] == Path{0, 1, 2});
  CHECK((*paths)[2] == Path{0, 3, 2});
  CHECK(count_disjoint_paths(g, 0, 2) == 4);
  CHECK_THROWS_AS(count_disjoint_paths(g, 1, 1), ParameterError);
}

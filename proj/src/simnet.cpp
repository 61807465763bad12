#include "qkdnet/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "qkdnet/rng.hpp"

namespace qkdnet::simnet {

namespace {

constexpr std::uint64_t kTopologyLabel = 0x544f504f;  // "TOPO"
constexpr std::uint64_t kArrivalLabel = 0x41525256;   // "ARRV"

double torus_dist(std::pair<double, double> a, std::pair<double, double> b) {
  double dx = std::fabs(a.first - b.first), dy = std::fabs(a.second - b.second);
  dx = std::min(dx, 1.0 - dx);
  dy = std::min(dy, 1.0 - dy);
  return std::sqrt(dx * dx + dy * dy);
}

// Missing edges ordered by length (geometric) or by a random key.
std::vector<std::tuple<double, NodeId, NodeId>> missing_edges(const Graph& g,
                                                              const std::vector<std::pair<double, double>>& pos,
                                                              Rng& rng) {
  std::vector<std::tuple<double, NodeId, NodeId>> out;
  const auto n = static_cast<NodeId>(g.num_vertices());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (!g.has_edge(u, v)) out.emplace_back(pos.empty() ? rng.uniform() : torus_dist(pos[u], pos[v]), u, v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void repair_min_degree(Graph& g, std::size_t min_deg, const std::vector<std::pair<double, double>>& pos, Rng& rng) {
  for (const auto& [d, u, v] : missing_edges(g, pos, rng)) {
    if (g.degree(u) < min_deg || g.degree(v) < min_deg) g.add_edge(u, v);
  }
}

}  // namespace

Topology make_topology(Graph g) {
  Topology t;
  t.N = g.num_vertices();
  t.C = qkdnet::node_connectivity(g);
  t.graph = std::move(g);
  return t;
}

std::size_t node_connectivity(const Topology& t) { return qkdnet::node_connectivity(t.graph); }

Topology gen_topology(std::size_t N, std::size_t f, std::uint64_t seed, const SamplerConfig& cfg) {
  if (N < 2) throw ParameterError("gen_topology: need at least two nodes");
  if (f + 1 > N - 1 || (N > 2 && N < 2 * f + 1)) {
    throw InfeasibleNetworkError("gen_topology: N too small for the requested f");
  }
  if (cfg.kind != "geometric" && cfg.kind != "erdos_renyi") throw ConfigError("unknown topology sampler: " + cfg.kind);
  Rng rng(derive_seed(seed, {kTopologyLabel, N, f}));
  std::vector<std::pair<double, double>> pos;
  Graph g;
  for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
    g = Graph(N);
    pos.clear();
    if (cfg.kind == "geometric") {
      for (std::size_t i = 0; i < N; ++i) pos.emplace_back(rng.uniform(), rng.uniform());
      for (NodeId u = 0; u < N; ++u) {
        for (NodeId v = u + 1; v < N; ++v) {
          if (torus_dist(pos[u], pos[v]) < cfg.radius) g.add_edge(u, v);
        }
      }
    } else {
      for (NodeId u = 0; u < N; ++u) {
        for (NodeId v = u + 1; v < N; ++v) {
          if (rng.uniform() < cfg.edge_prob) g.add_edge(u, v);
        }
      }
    }
    repair_min_degree(g, f + 1, pos, rng);
    if (qkdnet::node_connectivity(g) >= f + 1) return make_topology(std::move(g));
  }
  // Densify: shortest missing links first until the connectivity target holds.
  for (const auto& [d, u, v] : missing_edges(g, pos, rng)) {
    if (qkdnet::node_connectivity(g) >= f + 1) break;
    g.add_edge(u, v);
  }
  return make_topology(std::move(g));
}

std::uint64_t poisson_arrivals(const RequestStream& s, std::pair<NodeId, NodeId> pair, std::uint64_t window) {
  if (!(s.lambda >= 0.0)) throw ParameterError("poisson_arrivals: lambda must be non-negative");
  if (s.lambda == 0.0) return 0;
  Rng rng(derive_seed(s.seed, {kArrivalLabel, pair.first, pair.second, window}));
  return rng.poisson(s.lambda);
}

}  // namespace qkdnet::simnet

#include "doctest.h"

#include <sstream>

#include "qkdnet/simulation.hpp"

using namespace qkdnet;
using namespace qkdnet::sim;

namespace {

Graph cycle(std::size_t n) {
  Graph g(n);
  for (NodeId v = 0; v < n; ++v) g.add_edge(v, static_cast<NodeId>((v + 1) % n));
  return g;
}

Graph k33() {
  Graph g(6);
  for (NodeId a = 0; a < 3; ++a)
    for (NodeId b = 3; b < 6; ++b) g.add_edge(a, b);
  return g;
}

SimConfig base(std::size_t N, std::size_t f, std::uint64_t seed) {
  SimConfig c;
  c.N = N;
  c.f = f;
  c.seed = seed;
  c.lambda = 0.1;
  c.rounds = 30;
  c.arrival_rounds = 12;
  return c;
}

}  // namespace

TEST_CASE("honest run commits every view and agrees on every key") {
  const SimResult r = run_simulation(base(8, 1, 3));
  CHECK(r.violations.empty());
  CHECK(r.bound_held);
  CHECK(r.coalition.empty());
  CHECK(r.link_counter_sum == r.consumed[0] + r.consumed[1] + r.consumed[2]);
  CHECK(r.requests > 0);
  std::size_t done = 0;
  for (const auto& k : r.keys) {
    if (!(k.src_done && k.dst_done)) continue;
    ++done;
    CHECK(k.src_ok);
    CHECK(k.dst_ok);
    CHECK(k.src_key == k.dst_key);
    CHECK(k.src_key.size() == 320 - 64);
  }
  CHECK(done > 0);
  for (const auto& v : r.views) {
    if (v.start + 6 > r.rounds) continue;
    CHECK(v.commits.size() == 8);
    for (const auto& [node, round] : v.commit_round) CHECK(round - v.start == 5);
  }
}

TEST_CASE("runs are deterministic") {
  SimConfig c = base(6, 1, 11);
  c.log_level = EventLog::Level::full;
  std::ostringstream a, b;
  run_simulation(c).log.write_jsonl(a);
  run_simulation(c).log.write_jsonl(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().size() > 1000);
}

TEST_CASE("equivocating leader is deposed in its own view") {
  SimConfig c = base(6, 1, 5);
  c.behavior = Behavior::equivocate;
  c.coalition = std::set<NodeId>{0};
  const SimResult r = run_simulation(c);
  CHECK(r.violations.empty());
  REQUIRE_FALSE(r.views.empty());
  const ViewRecord& v0 = r.views.front();
  CHECK(v0.view == 0);
  CHECK(v0.equivocated);
  CHECK(v0.commits.empty());
  CHECK(v0.view_changed.size() == 5);
}

TEST_CASE("wrong KX with exactly f+1 paths fails safely") {
  SimConfig c = base(6, 1, 7);
  c.topology = cycle(6);
  c.behavior = Behavior::wrong_kx;
  c.coalition = std::set<NodeId>{1};
  c.lambda = 0.3;
  const SimResult r = run_simulation(c);
  CHECK(r.violations.empty());
  std::size_t failed = 0, ok = 0;
  for (const auto& k : r.keys) {
    if (!(k.src_done && k.dst_done)) continue;
    CHECK(k.src_ok == k.dst_ok);
    if (k.dst_ok) {
      ++ok;
      CHECK(k.src_key == k.dst_key);
    } else {
      ++failed;
      CHECK(std::find(k.blamed.begin(), k.blamed.end(), 1) != k.blamed.end());
    }
  }
  // On a cycle every path set of two other nodes runs through node 1.
  CHECK(failed > 0);
  CHECK(ok == 0);
}

TEST_CASE("an extra path absorbs one wrong KX") {
  SimConfig c = base(6, 1, 9);
  c.topology = k33();
  c.extra_paths = 1;
  c.behavior = Behavior::wrong_kx;
  c.coalition = std::set<NodeId>{3};
  c.lambda = 0.3;
  const SimResult r = run_simulation(c);
  CHECK(r.violations.empty());
  std::size_t blamed = 0, done = 0;
  for (const auto& k : r.keys) {
    if (!(k.src_done && k.dst_done)) continue;
    ++done;
    CHECK(k.src_ok);
    CHECK(k.dst_ok);
    CHECK(k.src_key == k.dst_key);
    blamed += !k.blamed.empty();
  }
  CHECK(done > 0);
  CHECK(blamed > 0);
}

TEST_CASE("consumption stays within the consensus bound") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SimResult r = run_simulation(base(12, 2, seed));
    CHECK(r.bound_held);
    CHECK(r.consumed[static_cast<std::size_t>(Category::consensus)] <= r.consensus_bound);
    CHECK(r.violations.empty());
  }
}

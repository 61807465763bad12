#include "doctest.h"

#include <algorithm>

#include "qkdnet/consensus.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/rng.hpp"

using namespace qkdnet;
using namespace qkdnet::consensus;

namespace {

// 0-1-2-3-0 cycle with chord 1-3 and pendant-ish node 4 attached to 0 only.
Graph sample_graph() {
  Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(3, 0);
  g.add_edge(1, 3);
  g.add_edge(0, 4);
  return g;
}

RequestInfo request(std::uint64_t id, NodeId src, NodeId dst, std::size_t paths) {
  return RequestInfo{id, src, dst, 32, std::vector<BitString>(paths, BitString::from_uint(id, 8))};
}

}  // namespace

TEST_CASE("pipeline schedule") {
  CHECK(pipeline_schedule(0) == 0);
  CHECK(pipeline_schedule(3) == 0);
  CHECK(pipeline_schedule(6) == 0);
  CHECK(pipeline_schedule(1) == 1);
  CHECK(pipeline_schedule(4) == 1);
  CHECK(pipeline_schedule(5) == 2);
}

TEST_CASE("propose bundles feasible requests") {
  const Graph g = sample_graph();
  PathPlanner planner(g, 2);
  std::vector<RequestInfo> pending{request(7, 0, 2, 2), request(3, 1, 3, 2), request(5, 4, 2, 2),
                                   request(9, 2, 0, 2)};
  const BuildResult built = propose(6, 0, pending, planner);
  // Node 4 has a single link: no two disjoint paths.
  CHECK(built.excluded == std::vector<std::uint64_t>{5});
  REQUIRE(built.proposal.schemes.size() == 3);
  CHECK(built.proposal.schemes[0].req_id == 3);
  CHECK(built.proposal.schemes[1].req_id == 7);
  for (const auto& s : built.proposal.schemes) {
    CHECK(s.paths.size() == 2);
    CHECK_FALSE(check_scheme(s, g, 1).has_value());
  }
  CHECK_FALSE(check_legitimacy(built.proposal, g, 1).has_value());
  // Scheme 0-2 goes through 1 and 3; 1-3 is direct plus one relay.
  const auto relays = built.proposal.relays();
  CHECK(relays.count(1));
  CHECK(relays.count(3));
  CHECK_FALSE(relays.count(4));
}

TEST_CASE("legitimacy rules") {
  const Graph g = sample_graph();
  PathPlanner planner(g, 2);
  std::vector<RequestInfo> pending{request(1, 0, 2, 2)};
  const Proposal good = propose(0, 0, pending, planner).proposal;
  REQUIRE(good.schemes.size() == 1);

  SUBCASE("unequal share lengths") {
    Proposal p = good;
    p.schemes[0].share_len[1] += 1;
    CHECK(check_legitimacy(p, g, 1).has_value());
  }
  SUBCASE("too few paths") {
    Proposal p = good;
    p.schemes[0].paths.pop_back();
    p.schemes[0].share_len.pop_back();
    p.schemes[0].share_synd.pop_back();
    CHECK(check_legitimacy(p, g, 1).has_value());
    CHECK_FALSE(check_legitimacy(p, g, 0).has_value());
  }
  SUBCASE("path uses a missing edge") {
    Proposal p = good;
    p.schemes[0].paths[0] = {0, 2};
    CHECK(check_legitimacy(p, g, 1).has_value());
  }
  SUBCASE("paths share a relay") {
    Proposal p = good;
    p.schemes[0].paths = {{0, 1, 2}, {0, 3, 1, 2}};
    CHECK(check_legitimacy(p, g, 1).has_value());
  }
  SUBCASE("wrong endpoints") {
    Proposal p = good;
    p.schemes[0].paths[1].back() = 3;
    CHECK(check_legitimacy(p, g, 1).has_value());
  }
  SUBCASE("duplicate request") {
    Proposal p = good;
    p.schemes.push_back(p.schemes[0]);
    CHECK(check_legitimacy(p, g, 1).has_value());
  }
  SUBCASE("pending match") {
    std::map<std::uint64_t, RequestInfo> known{{1, pending[0]}};
    CHECK_FALSE(check_legitimacy(good, g, 1, &known).has_value());
    known.clear();
    CHECK(check_legitimacy(good, g, 1, &known).has_value());
  }
}

TEST_CASE("proposal digests separate conflicting bundles") {
  const Graph g = sample_graph();
  PathPlanner planner(g, 2);
  std::vector<RequestInfo> pending{request(1, 0, 2, 2), request(2, 1, 3, 2)};
  Proposal a = propose(0, 0, pending, planner).proposal;
  Proposal b = a;
  CHECK(a.digest() == b.digest());
  CHECK(a.digest().size() == 32);
  b.bundle += 1;
  CHECK(a.digest() != b.digest());
  b = a;
  std::reverse(b.schemes.begin(), b.schemes.end());
  CHECK(a.digest() != b.digest());
}

TEST_CASE("commit rule") {
  const std::set<NodeId> relays{1, 3, 5};
  CHECK(try_commit(true, false, relays, {1, 3, 5}, 1) == CommitDecision::arm);
  CHECK(try_commit(true, false, relays, {1, 3, 5, 0}, 1) == CommitDecision::arm);
  // A silent named relay blocks the commit.
  CHECK(try_commit(true, false, relays, {1, 3, 0, 2}, 1) == CommitDecision::pending);
  CHECK(try_commit(true, true, relays, {1, 3, 5}, 1) == CommitDecision::view_change);
  CHECK(try_commit(false, false, relays, {1, 3, 5}, 1) == CommitDecision::pending);
  // Quorum of f + 1 distinct voters.
  CHECK(try_commit(true, false, {}, {4, 6}, 2) == CommitDecision::pending);
  CHECK(try_commit(true, false, {}, {4, 6, 7}, 2) == CommitDecision::arm);
}

TEST_CASE("leader election from the common random string") {
  std::vector<BitString> zero(3, BitString(40));
  CHECK(crs_mod(zero, 7) == 0);
  CHECK(elect_leader(zero, 7) == 0);
  CHECK(elect_leader(zero, 7, 2) == 2);

  Rng rng(4);
  std::vector<BitString> keys;
  for (int i = 0; i < 5; ++i) keys.push_back(rng.bits(30 + 7 * i));
  const NodeId leader = elect_leader(keys, 11);
  for (int t = 0; t < 20; ++t) {
    std::vector<BitString> perm = keys;
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    CHECK(elect_leader(perm, 11) == leader);
  }

  // Truncated to the shortest key and read big-endian.
  std::vector<BitString> small{BitString::from_binary("1011"), BitString::from_binary("001011")};
  CHECK(crs_mod(small, 100) == 0b1001);
  CHECK_THROWS_AS(crs_mod({}, 3), ParameterError);
}

TEST_CASE("view bookkeeping") {
  ViewState vs;
  CHECK_FALSE(vs.done());
  vs.voter_keys[3] = BitString(4);
  vs.voter_keys[1] = BitString(4);
  CHECK(vs.voters() == std::set<NodeId>{1, 3});
  vs.failed = true;
  CHECK(vs.done());
}

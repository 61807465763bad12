// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"
#include "qkdnet/adversary.hpp"
#include "qkdnet/harness.hpp"
#include "qkdnet/rng.hpp"

using namespace qkdnet;

namespace {

// Pinned tolerances and sizes.
constexpr int kCorrectnessConfigs = 200;          // criterion 1
constexpr double kCorrectnessBudgetSec = 120;     // criterion 1 runtime
constexpr int kEquivocationRuns = 500;            // criterion 2
constexpr int kHonestRuns = 500;                  // criterion 3
constexpr std::uint64_t kCommitWithin = 8;        // criterion 3, rounds of one delta
constexpr std::uint64_t kFairnessViews = 10000;   // criterion 4
constexpr std::uint64_t kForgeryTrials = 100000;  // criterion 5
constexpr double kForgeryBudgetSec = 300;         // criterion 5 runtime
constexpr std::size_t kMaxEnumNodes = 6;          // criterion 7
constexpr double kRatioN10Lo = 1.0, kRatioN10Hi = 2.0;   // criterion 9
constexpr double kRatioN80Lo = 0.08, kRatioN80Hi = 0.24;  // criterion 9
constexpr double kGridBudgetSec = 600;                    // criterion 9 runtime

struct BoundTally {
  std::size_t runs = 0;
  std::size_t broken = 0;
  void add(bool held, std::uint64_t consensus, std::uint64_t bound) {
    ++runs;
    broken += !held || consensus > bound;
  }
  void add(const sim::SimResult& r) {
    add(r.bound_held, r.consumed[static_cast<std::size_t>(Category::consensus)], r.consensus_bound);
  }
};
BoundTally g_bound;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t pick_f(Rng& rng, std::size_t N) {
  const std::size_t cap = std::min<std::size_t>(3, (N - 1) / 2);
  return rng.below(cap + 1);
}

// 1. Honest endpoints agree or fail together with a blame report.
Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  const sim::Behavior behaviors[] = {sim::Behavior::honest, sim::Behavior::wrong_kx, sim::Behavior::silent,
                                     sim::Behavior::equivocate};
  std::size_t schemes = 0, agreed = 0, failed = 0, divergent = 0, unblamed = 0, violations = 0;
  for (int i = 0; i < kCorrectnessConfigs; ++i) {
    sim::SimConfig c;
    c.N = 4 + rng.below(17);
    c.f = pick_f(rng, c.N);
    c.seed = 5000 + i;
    c.lambda = 0.05 + 0.25 * rng.uniform();
    c.rounds = 22;
    c.arrival_rounds = 10;
    c.behavior = c.f == 0 ? sim::Behavior::honest : behaviors[rng.below(4)];
    c.log_level = EventLog::Level::off;
    const sim::SimResult r = sim::run_simulation(c);
    g_bound.add(r);
    violations += r.violations.size();
    for (const auto& k : r.keys) {
      if (r.coalition.count(k.src) || r.coalition.count(k.dst)) continue;
      if (!(k.src_done && k.dst_done)) continue;
      ++schemes;
      if (k.diverged()) {
        ++divergent;
      } else if (k.src_ok) {
        ++agreed;
      } else {
        ++failed;
        unblamed += k.blamed.empty();
      }
    }
  }
  const double dt = seconds_since(t0);
  char buf[384];
  std::snprintf(buf, sizeof buf,
                "%d configs, %zu schemes: %zu identical keys, %zu joint failures (%zu unblamed), %zu divergent, "
                "%zu violations, %.1fs (limit %.0fs)",
                kCorrectnessConfigs, schemes, agreed, failed, unblamed, divergent, violations, dt,
                kCorrectnessBudgetSec);
  return {divergent == 0 && unblamed == 0 && violations == 0 && schemes > 0 && dt < kCorrectnessBudgetSec, buf};
}

// 2. Equivocating leaders never split honest commits and are always deposed.
Outcome equivocation_safety() {
  Rng rng(2002);
  std::size_t conflicting = 0, runs_without_episode = 0, undeposed = 0, commits_in_split = 0, violations = 0,
              episodes = 0, unsettled = 0;
  for (int i = 0; i < kEquivocationRuns; ++i) {
    sim::SimConfig c;
    c.N = 4 + rng.below(9);
    c.f = 1 + rng.below(std::min<std::size_t>(3, (c.N - 1) / 2));
    c.seed = 7000 + i;
    c.lambda = 0.2;
    c.rounds = 14;
    c.arrival_rounds = 6;
    c.log_level = EventLog::Level::off;
    c.behavior = sim::Behavior::equivocate;
    c.coalition_has_first_leader = true;
    const sim::SimResult r = sim::run_simulation(c);
    g_bound.add(r);
    const auto e = adversary::summarize_equivocation(r);
    conflicting += e.conflicting_views;
    runs_without_episode += e.equivocated_views == 0;
    undeposed += e.equivocated_views - e.deposed_in_view;
    commits_in_split += e.honest_commits_in_equivocated;
    violations += e.violations.size();
    episodes += e.equivocated_views;
    unsettled += e.unsettled;
  }
  char buf[384];
  std::snprintf(buf, sizeof buf,
                "%d runs, %zu settled equivocated views (%zu opened too late to settle): %zu conflicting views, %zu not deposed, %zu runs without an "
                "equivocation, %zu honest commits in split views, %zu violations",
                kEquivocationRuns, episodes, unsettled, conflicting, undeposed, runs_without_episode, commits_in_split,
                violations);
  return {conflicting == 0 && undeposed == 0 && runs_without_episode == 0 && violations == 0, buf};
}

// 3. Views with an honest leader commit at every honest node within 8 rounds.
Outcome liveness() {
  Rng rng(3003);
  std::size_t views = 0, late = 0, runs_failed = 0, violations = 0;
  std::uint64_t worst = 0;
  for (int i = 0; i < kHonestRuns; ++i) {
    sim::SimConfig c;
    c.N = 4 + rng.below(13);
    c.f = pick_f(rng, c.N);
    c.seed = 9000 + i;
    c.lambda = 0.2;
    c.rounds = 20;
    c.arrival_rounds = 12;
    c.log_level = EventLog::Level::off;
    const sim::SimResult r = sim::run_simulation(c);
    g_bound.add(r);
    violations += r.violations.size();
    const std::size_t honest = r.topology.N - r.coalition.size();
    bool ok = true;
    for (const auto& v : r.views) {
      if (!v.leader_honest || v.start + kCommitWithin >= r.rounds) continue;
      ++views;
      bool in_time = v.commits.size() == honest;
      for (const auto& [node, round] : v.commit_round) {
        worst = std::max(worst, round - v.start);
        in_time &= round - v.start <= kCommitWithin;
      }
      late += !in_time;
      ok &= in_time;
    }
    runs_failed += !ok;
  }
  char buf[384];
  std::snprintf(buf, sizeof buf,
                "%d runs, %zu honest-leader views: %zu late or incomplete, slowest commit %llu rounds after the "
                "proposal (limit %llu), %zu violations",
                kHonestRuns, views, late, static_cast<unsigned long long>(worst),
                static_cast<unsigned long long>(kCommitWithin), violations);
  return {late == 0 && runs_failed == 0 && views > 0 && violations == 0, buf};
}

// 4. Leader frequency is uniform although f voters fix their keys in advance.
Outcome fairness() {
  const auto r = adversary::leader_fairness(10, 3, kFairnessViews, 4004);
  char buf[384];
  std::snprintf(buf, sizeof buf, "N=10 f=3, %llu views: chi2 = %.2f < %.2f (99%% quantile, 9 dof)",
                static_cast<unsigned long long>(kFairnessViews), r.chi2, r.threshold);
  return {r.pass, buf};
}

// 5. Substitution forgery rate stays under the guessing bound.
Outcome substitution() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (auto [f, C, k] : {std::tuple{3u, 4u, 8u}, std::tuple{6u, 8u, 4u}}) {
    adversary::SubstitutionParams p;
    p.f = f;
    p.C = C;
    p.k = k;
    p.trials = kForgeryTrials;
    p.seed = 5005 + C;
    const auto r = adversary::attack_substitution(p);
    pass &= r.verdict;
    char buf[160];
    std::snprintf(buf, sizeof buf, "(C-f,k)=(%u,%u): %llu/%llu = %.5f vs bound %.5f + 3 sigma %.5f; ", C - f, k,
                  static_cast<unsigned long long>(r.successes), static_cast<unsigned long long>(r.trials),
                  r.params["rate"].get<double>(), r.bound, 3 * r.params["sigma"].get<double>());
    detail += buf;
  }
  const double dt = seconds_since(t0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fs (limit %.0fs)", dt, kForgeryBudgetSec);
  return {pass && dt < kForgeryBudgetSec, detail + buf};
}

// 6. The two-area example: rejected with the bridge, accepted without it.
Outcome fake_area() {
  const std::set<NodeId> coalition{8, 9}, fake{4, 5, 6, 7};
  bool pass = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto with = adversary::attack_fake_area(adversary::two_area_topology(true), coalition, fake, 3, 2, 64, seed);
    const auto without =
        adversary::attack_fake_area(adversary::two_area_topology(false), coalition, fake, 3, 2, 64, seed);
    pass &= with.rejected && !with.accepted && without.accepted && !without.rejected;
  }
  return {pass, "observer 3, coalition {8,9}, fake {4..7}, f=2, 5 seeds: rejected with link 2-6, accepted without"};
}

// 7. Validation graph and trust against brute force on every small graph.
Outcome small_graphs() {
  std::size_t graphs = 0, edge_mismatch = 0, trust_mismatch = 0, checks = 0;
  Rng rng(7007);
  for (std::size_t n = 2; n <= kMaxEnumNodes; ++n) {
    const std::uint32_t masks = 1u << (n * (n - 1) / 2);
    for (std::uint32_t mask = 1; mask < masks; ++mask) {
      const Graph g = oracle::graph_from_mask(n, mask);
      if (!oracle::connected_without(g, 0)) continue;
      ++graphs;
      for (int variant = 0; variant < 2; ++variant) {
        fixture::Round r(g, 4, 100000 + mask * 8 + n * 2 + variant);
        if (variant == 1) {
          // Corrupt some disclosures so the validation graph loses edges.
          for (auto& d : r.disc) {
            if (rng.uniform() < 0.35) d.raw_bits.flip(rng.below(d.raw_bits.size()));
          }
        }
        const auto vg = r.validation_graph();
        for (NodeId u = 0; u < n; ++u) {
          for (NodeId v = u + 1; v < n; ++v) {
            bool expect = false;
            std::size_t pu = 0;
            for (const auto& su : r.disc[u].segments) {
              std::size_t pv = 0;
              for (const auto& sv : r.disc[v].segments) {
                if (su.link == sv.link && su.offset == sv.offset &&
                    r.disc[u].raw_bits.slice(pu, su.len) == r.disc[v].raw_bits.slice(pv, sv.len)) {
                  expect = true;
                }
                pv += sv.len;
              }
              pu += su.len;
            }
            edge_mismatch += vg.graph().has_edge(u, v) != expect;
          }
        }
        for (NodeId u = 0; u < n; ++u) {
          for (NodeId v = 0; v < n; ++v) {
            if (u == v) continue;
            const std::size_t paths = oracle::max_disjoint_paths(vg.graph(), u, v);
            for (std::size_t f = 0; f + 1 < n; ++f) {
              ++checks;
              trust_mismatch += auth::trust_decision(vg, u, v, f) != (paths >= f + 1);
            }
          }
        }
      }
    }
  }
  char buf[384];
  std::snprintf(buf, sizeof buf,
                "%zu connected graphs on 2..%zu nodes, clean and corrupted: %zu edge mismatches, %zu/%zu trust "
                "mismatches",
                graphs, kMaxEnumNodes, edge_mismatch, trust_mismatch, checks);
  return {edge_mismatch == 0 && trust_mismatch == 0, buf};
}

// 8. Coalition view of a 4-bit scheme carries no information about the secret.
Outcome secrecy() {
  const std::vector<std::vector<Path>> topologies{{{0, 1, 4}, {0, 2, 3, 4}}, {{0, 4}, {0, 1, 2, 3, 4}}};
  bool pass = true;
  std::string detail;
  for (std::size_t t = 0; t < topologies.size(); ++t) {
    pass &= adversary::secrecy_crosscheck(topologies[t], 2000, 8008 + t);
    for (NodeId m : {1u, 2u, 3u}) {
      const auto r = adversary::secrecy_enumeration(topologies[t], {m});
      pass &= r.independent && r.mi_bits == 0.0;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%c{%u}: I=%.3g bits over 2^%d; ", 'A' + static_cast<int>(t), m, r.mi_bits,
                    static_cast<int>(std::log2(static_cast<double>(r.configs))));
      detail += buf;
    }
  }
  // The enumeration must be able to see a leak: a coalition on both paths learns S.
  const auto control = adversary::secrecy_enumeration(topologies[0], {1, 2});
  pass &= !control.independent && std::abs(control.mi_bits - 4.0) < 1e-9;
  char buf[96];
  std::snprintf(buf, sizeof buf, "control A{1,2}: I=%.3f bits", control.mi_bits);
  return {pass, detail + buf};
}

// Published share checksums are outside the structural claim; report what they leak.
void syndrome_diagnostic() {
  const auto r = adversary::secrecy_enumeration({{0, 1, 4}, {0, 2, 3, 4}}, {1}, true);
  std::printf("INFO [8] with 1-bit share checksums published, coalition {1} on A learns I=%.4f bits of a 4-bit "
              "secret\n",
              r.mi_bits);
}

// 9. Consumption ratio bands and trend over N.
Outcome consumption(std::vector<double>& ratios) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  const unsigned workers = harness::default_workers();
  for (std::size_t N : {10u, 20u, 40u, 80u}) {
    harness::ExperimentConfig c;
    c.N = N;
    c.f = 1;
    c.lambda = 1.0;
    const auto r = harness::run_experiment(c, workers);
    for (const auto& rec : r.records) g_bound.add(rec.bound_held, rec.proposed[2], rec.consensus_bound);
    ratios.push_back(r.ratio());
    char buf[96];
    std::snprintf(buf, sizeof buf, "N=%zu %.3f (sigma %.0f / %.0f bits); ", N, r.ratio(), r.proposed.sigma,
                  r.preshared.sigma);
    detail += buf;
    std::fflush(stdout);
  }
  const double dt = seconds_since(t0);
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) monotone &= ratios[i] < ratios[i - 1];
  const bool band10 = ratios[0] >= kRatioN10Lo && ratios[0] <= kRatioN10Hi;
  const bool band80 = ratios[3] >= kRatioN80Lo && ratios[3] <= kRatioN80Hi;
  char buf[192];
  std::snprintf(buf, sizeof buf, "bands [%.2f,%.2f] and [%.2f,%.2f]: %s/%s, decreasing: %s, %.0fs (limit %.0fs)",
                kRatioN10Lo, kRatioN10Hi, kRatioN80Lo, kRatioN80Hi, band10 ? "in" : "out", band80 ? "in" : "out",
                monotone ? "yes" : "no", dt, kGridBudgetSec);
  return {band10 && band80 && monotone && dt < kGridBudgetSec, detail + buf};
}

// 10. Consensus consumption bound on every run of this suite.
Outcome consensus_bound() {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu runs checked every round, %zu above E*k_max*steps", g_bound.runs,
                g_bound.broken);
  return {g_bound.broken == 0 && g_bound.runs > 0, buf};
}

// 11. Non-repudiation and substitution closed forms coincide at f = 1.
Outcome bound_identity() {
  std::size_t cases = 0, unequal = 0;
  for (long m : {8L, 64L, 128L, 256L}) {
    for (long k : {4L, 20L, 96L, 200L}) {
      for (long s : {1L, 16L, 64L, 100L}) {
        const long n = m + k + s;
        ++cases;
        unequal += adversary::bound_nonrepudiation(m, 1, k, n) != adversary::bound_substitution(m, 1, k, n, 1e-12).toeplitz;
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu parameter sets, %zu unequal (exact comparison)", cases, unequal);
  return {unequal == 0, buf};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || only.count(id); };

  std::vector<double> ratios;
  const std::vector<std::pair<int, std::pair<const char*, std::function<Outcome()>>>> criteria{
      {11, {"bound calculators agree at f=1", bound_identity}},
      {6, {"fake-area detection", fake_area}},
      {4, {"leader fairness", fairness}},
      {5, {"substitution bound", substitution}},
      {8, {"structural secrecy", secrecy}},
      {7, {"validation graph oracle equivalence", small_graphs}},
      {1, {"end-to-end correctness", end_to_end}},
      {2, {"consensus safety under equivocation", equivocation_safety}},
      {3, {"liveness of honest-leader views", liveness}},
      {9, {"consumption trend", [&] { return consumption(ratios); }}},
      {10, {"consensus consumption bound", consensus_bound}},
  };
  int failures = 0;
  for (const auto& [id, c] : criteria) {
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = c.second();
    failures += !o.pass;
    std::printf("%s [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, c.first, o.detail.c_str(),
                seconds_since(t0));
    if (id == 8) syndrome_diagnostic();
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

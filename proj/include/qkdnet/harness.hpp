#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkdnet/graph.hpp"
#include "qkdnet/keyfabric.hpp"
#include "qkdnet/simulation.hpp"

namespace qkdnet::harness {

struct ExperimentConfig {
  std::size_t N = 10;
  std::size_t f = 1;
  double lambda = 1.0;
  double delta = 1.0;  // seconds per round
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t rounds = 20;
  simnet::SamplerConfig sampler;
  std::size_t tag_len = 63;
  std::size_t share_len = 320;
  /// Ablation: also charge the key distribution payload to both schemes.
  bool include_payload = false;
  sim::Behavior behavior = sim::Behavior::honest;
  std::string scheme = "both";  // rows to report: proposed, preshared or both

  /// Throws ConfigError on unknown keys or out-of-range values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  sim::SimConfig sim_config(std::uint64_t seed) const;
};

/// One (src, dst) pair with at least one request arriving in `window`.
struct PairWindow {
  NodeId src = 0, dst = 0;
  std::uint64_t window = 0;
};

/// End-to-end pre-shared-key scheme: each window in which a non-adjacent
/// ordered pair authenticates anything costs tag_len bits carried over its
/// f+1 shortest disjoint paths, i.e. tag_len * sum of their lengths.
std::uint64_t baseline_cost(const Graph& topology, const std::vector<PairWindow>& requests, std::size_t f,
                            std::size_t tag_len = 63);
/// Pair windows of a run, regenerated from the same arrival stream the simulator uses.
std::vector<PairWindow> request_windows(const sim::SimConfig& cfg, std::size_t N);

/// E * k_max * steps.
std::uint64_t consensus_cost_bound(std::uint64_t edges, std::uint64_t k_max, std::uint64_t steps);
std::uint64_t consensus_cost_bound(const Graph& topology, std::uint64_t k_max, std::uint64_t steps);

struct RunRecord {
  std::uint64_t seed = 0;
  std::array<std::uint64_t, kNumCategories> proposed{};
  std::uint64_t link_counter_sum = 0;
  std::uint64_t baseline = 0;
  std::uint64_t consensus_bound = 0;
  bool bound_held = true;
  std::uint64_t requests = 0;
  std::uint64_t keys_ok = 0;
  std::uint64_t keys_failed = 0;
  std::size_t edges = 0;
  std::size_t C = 0;
  std::vector<std::string> violations;

  nlohmann::ordered_json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct ConsumptionReport {
  std::string scheme;  // proposed | preshared
  std::size_t N = 0, f = 0;
  double lambda = 0;
  std::vector<std::uint64_t> runs;        // seeds
  std::vector<std::uint64_t> total_bits;  // per run
  std::array<double, kNumCategories> per_category{};  // means
  double mean = 0;
  double sigma = 0;  // sample standard deviation over runs
  nlohmann::ordered_json to_json() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  ConsumptionReport proposed, preshared;
  std::vector<RunRecord> records;
  double ratio() const { return preshared.mean > 0 ? proposed.mean / preshared.mean : 0.0; }
  bool ok() const;  // no violations and the consensus bound held on every run
};

RunRecord run_one(const ExperimentConfig& cfg, std::uint64_t seed);
/// Runs every seed, fanned out over `workers` threads (0: QKDNET_WORKERS or
/// the hardware concurrency). Results do not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers = 0);
/// Builds both schemes' reports from finished runs.
ExperimentResult aggregate(const ExperimentConfig& cfg, std::vector<RunRecord> records);
unsigned default_workers();

/// One row per (N, f, lambda, scheme). Formats: "csv" or "jsonl".
void emit_report(const std::vector<ExperimentResult>& results, const std::string& format, std::ostream& out);
void emit_report(const std::vector<ExperimentResult>& results, const std::string& format,
                 const std::string& path);

}  // namespace qkdnet::harness

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qkdnet/auth.hpp"
#include "qkdnet/event_log.hpp"
#include "qkdnet/keyfabric.hpp"
#include "qkdnet/simnet.hpp"

namespace qkdnet::sim {

/// What coalition members do beyond following the protocol.
enum class Behavior {
  honest,      // coalition members follow the protocol
  equivocate,  // as leader, send conflicting proposals to two halves of the network
  wrong_kx,    // as relay, commit the true KX checksum but broadcast a corrupted KX
  silent,      // never broadcast
};
Behavior parse_behavior(const std::string& s);
const char* behavior_name(Behavior b);

struct SimConfig {
  std::size_t N = 10;
  std::size_t f = 1;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t rounds = 24;
  /// Requests arrive in rounds [0, arrival_rounds); 0 means every round.
  std::uint64_t arrival_rounds = 0;
  simnet::SamplerConfig sampler;
  std::optional<Graph> topology;  // overrides the sampler

  SecurityParams security;  // f and C are filled in from the run
  auth::AuthConfig auth;
  std::size_t share_len = 320;
  std::size_t extra_paths = 0;
  std::size_t synd_len = crypto::kDefaultSyndromeLen;

  Behavior behavior = Behavior::honest;
  /// Explicit coalition; otherwise f members drawn from the seed.
  std::optional<std::set<NodeId>> coalition;
  /// Put the first leader of pipeline 0 into the drawn coalition.
  bool coalition_has_first_leader = false;
  EventLog::Level log_level = EventLog::Level::protocol;
};

struct KeyOutcome {
  std::uint64_t req_id = 0;
  NodeId src = 0, dst = 0;
  std::uint64_t view = 0;
  bool src_done = false, dst_done = false;
  bool src_ok = false, dst_ok = false;
  BitString src_key, dst_key;
  std::vector<NodeId> blamed;
  bool diverged() const { return src_done && dst_done && (src_ok != dst_ok || (src_ok && !(src_key == dst_key))); }
};

struct ViewRecord {
  std::uint64_t view = 0;
  std::size_t pipeline = 0;
  std::uint64_t start = 0;
  NodeId leader = 0;
  bool leader_honest = true;
  bool equivocated = false;      // the leader actually split its proposal
  bool had_requests = false;
  std::map<NodeId, std::string> commits;         // honest node -> committed digest
  std::map<NodeId, std::uint64_t> commit_round;  // honest node -> round
  std::set<NodeId> view_changed;                 // honest nodes that advanced on f+1 view changes
  std::set<NodeId> gave_up;                      // honest nodes whose view-change timer ran out
};

struct SimResult {
  simnet::Topology topology;
  std::set<NodeId> coalition;
  std::vector<std::size_t> k;  // per node, 0 = abstains
  std::size_t k_max = 0;
  std::uint64_t rounds = 0;
  std::array<std::uint64_t, kNumCategories> consumed{};
  std::uint64_t link_counter_sum = 0;
  std::uint64_t consensus_bound = 0;  // E * k_max * rounds
  bool bound_held = true;             // checked after every round
  std::uint64_t requests = 0;
  std::uint64_t excluded = 0;
  std::vector<KeyOutcome> keys;
  std::vector<ViewRecord> views;
  std::vector<std::string> violations;
  EventLog log;
};

/// Runs the whole protocol stack in lock step for cfg.rounds rounds.
SimResult run_simulation(const SimConfig& cfg);

}  // namespace qkdnet::sim

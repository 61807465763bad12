#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qkdnet/bits.hpp"
#include "qkdnet/graph.hpp"

namespace qkdnet::consensus {

inline constexpr std::size_t kPipelines = 3;

/// Pipeline allowed to open a view in round r.
inline std::size_t pipeline_schedule(std::uint64_t round) { return static_cast<std::size_t>(round % kPipelines); }

/// One key-distribution scheme of a bundle: the paths chosen for a request
/// together with the source's share checksums.
struct SchemeSpec {
  std::uint64_t req_id = 0;
  NodeId src = 0, dst = 0;
  std::vector<Path> paths;
  std::vector<std::uint32_t> share_len;  // per path
  std::vector<BitString> share_synd;     // per path, checksum of the share
  friend bool operator==(const SchemeSpec&, const SchemeSpec&) = default;
};

struct Proposal {
  std::uint64_t view = 0;
  std::uint64_t bundle = 0;
  NodeId leader = 0;
  std::vector<SchemeSpec> schemes;

  Bytes encode() const;
  /// 32-byte BLAKE2b identifier of the encoding (used to group votes).
  std::string digest() const;
  /// Nodes strictly inside some path.
  std::set<NodeId> relays() const;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

/// Pending request as seen by a replica (from the source's confirmed broadcast).
struct RequestInfo {
  std::uint64_t req_id = 0;
  NodeId src = 0, dst = 0;
  std::uint32_t share_len = 0;
  std::vector<BitString> share_synd;
};

/// Why a scheme or proposal is not legitimate, or nullopt if it is.
std::optional<std::string> check_scheme(const SchemeSpec& s, const Graph& topology, std::size_t f);
std::optional<std::string> check_legitimacy(const Proposal& p, const Graph& topology, std::size_t f,
                                            const std::map<std::uint64_t, RequestInfo>* pending = nullptr);

/// Caches shortest disjoint path sets per ordered pair on a fixed topology.
class PathPlanner {
 public:
  PathPlanner(const Graph& topology, std::size_t paths) : g_(topology), paths_(paths) {}
  const std::optional<std::vector<Path>>& plan(NodeId src, NodeId dst);
  std::size_t paths() const { return paths_; }

 private:
  const Graph& g_;
  std::size_t paths_;
  std::map<std::pair<NodeId, NodeId>, std::optional<std::vector<Path>>> cache_;
};

struct BuildResult {
  Proposal proposal;
  std::vector<std::uint64_t> excluded;  // infeasible requests
};

/// Leader side: bundles every pending request (ascending id) into one
/// proposal; requests without enough disjoint paths are excluded.
BuildResult propose(std::uint64_t view, NodeId leader, std::span<const RequestInfo> pending, PathPlanner& planner);

/// XOR of the voters' raw keys truncated to the shortest, read as a
/// big-endian integer, reduced mod n. Order of the keys is irrelevant.
std::uint64_t crs_mod(std::span<const BitString> raw_keys, std::uint64_t n);
/// Leader for the view following a committed one: CRS plus the number of
/// failed views since, mod n.
NodeId elect_leader(std::span<const BitString> voter_raw_keys, std::size_t n, std::uint64_t failed_since = 0);

enum class Trigger : std::uint8_t { equivocation = 1, leader_timeout = 2, verify_failure = 3 };
const char* trigger_name(Trigger t);

enum class CommitDecision { arm, pending, view_change };

/// Commit rule after the verify round: the proposal verified, no equivocation
/// evidence, every named relay voted and at least f + 1 distinct valid voters.
CommitDecision try_commit(bool proposal_confirmed, bool equivocation, const std::set<NodeId>& relays,
                          const std::set<NodeId>& voters, std::size_t f);

/// Round offsets of the steps of a view that opens at round s.
struct Timing {
  static constexpr std::uint64_t vote = 1;
  static constexpr std::uint64_t verify = 2;
  static constexpr std::uint64_t commit_check = 3;
  static constexpr std::uint64_t commit_timer = 2;  // 2 delta after the check
  static constexpr std::uint64_t leader_timeout = 8;
  static constexpr std::uint64_t view_change_timeout = 6;
  static constexpr std::uint64_t new_leader_wait = 2;
};

/// A replica's bookkeeping for one view.
struct ViewState {
  std::uint64_t view = 0;
  std::size_t pipeline = 0;
  std::uint64_t start = 0;
  NodeId leader = 0;
  bool is_leader = false;

  std::shared_ptr<const Proposal> proposal;  // shared by every replica that received it
  std::shared_ptr<const Bytes> proposal_payload;  // leader broadcast that carried it
  BitString proposal_tag;
  std::string digest;
  bool voted = false;
  bool proposal_confirmed = false;
  bool proposal_rejected = false;

  std::map<NodeId, BitString> voter_keys;  // confirmed voters -> vote-round raw key
  std::set<NodeId> verify_from;
  bool equivocation = false;
  std::optional<std::uint64_t> commit_at;
  bool committed = false;
  bool failed = false;

  std::optional<Trigger> vc_trigger;
  std::uint64_t vc_since = 0;
  std::set<NodeId> vc_from;  // confirmed view-change senders
  bool vc_gave_up = false;

  bool done() const { return committed || failed; }
  std::set<NodeId> voters() const;
};

}  // namespace qkdnet::consensus

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qkdnet/auth.hpp"
#include "qkdnet/bits.hpp"
#include "qkdnet/consensus.hpp"

namespace qkdnet::proto {

/// A source announces a key-distribution request and commits to its shares.
struct RequestItem {
  std::uint64_t req_id = 0;
  NodeId src = 0, dst = 0;
  std::uint32_t share_len = 0;
  std::vector<BitString> share_synd;
};

struct ProposeItem {
  consensus::Proposal proposal;
};

/// Copy of a leader broadcast as a voter received it.
struct LeaderEcho {
  NodeId leader = 0;
  std::uint64_t round = 0;
  std::shared_ptr<const Bytes> payload;
  BitString tag;
};

struct KxCommit {
  std::uint32_t scheme = 0, path = 0, hop = 0;
  BitString synd;
};

struct VoteItem {
  std::uint64_t view = 0;
  std::string digest;
  LeaderEcho echo;
  std::vector<KxCommit> kx;  // empty when the voter relays nothing
};

struct VerifyItem {
  std::uint64_t view = 0;
  std::vector<std::pair<NodeId, std::uint64_t>> vote_sns;
};

struct ViewChangeItem {
  std::uint64_t view = 0;
  consensus::Trigger trigger = consensus::Trigger::leader_timeout;
  std::optional<std::pair<LeaderEcho, LeaderEcho>> evidence;
};

struct KxItem {
  std::uint64_t view = 0;
  std::string digest;
  std::uint32_t scheme = 0, path = 0, hop = 0;
  BitString bits;
};

struct CipherItem {
  std::uint64_t view = 0;
  std::string digest;
  std::uint32_t scheme = 0, path = 0;
  BitString cipher;
  BitString synd_seed;  // revealed share checksum seed
};

struct VerdictItem {
  std::uint64_t view = 0;
  std::string digest;
  std::uint32_t scheme = 0;
  std::uint64_t req_id = 0;
  bool success = false;
  std::vector<std::uint8_t> clean;
  std::vector<NodeId> blamed;
};

using Item = std::variant<RequestItem, ProposeItem, VoteItem, VerifyItem, ViewChangeItem, KxItem, CipherItem,
                          VerdictItem>;

const char* item_name(const Item& item);

/// One physical broadcast per node per round: every pipeline's messages
/// merged, tagged under the round's authentication key, plus the disclosure
/// of the previous round's raw key (outside the tag).
struct Envelope {
  std::uint64_t sn = 0;
  NodeId sender = 0;
  std::uint64_t round = 0;
  std::vector<Item> items;
  std::shared_ptr<const Bytes> payload;
  BitString tag;
  std::shared_ptr<const auth::Disclosure> disclosure;
};

Bytes encode_payload(std::uint64_t sn, NodeId sender, std::uint64_t round, const std::vector<Item>& items);

}  // namespace qkdnet::proto

#include "qkdnet/protocol.hpp"

#include "qkdnet/wire.hpp"

namespace qkdnet::proto {

namespace {

void put_echo(ByteWriter& w, const LeaderEcho& e) {
  w.u32(e.leader);
  w.u64(e.round);
  if (e.payload) {
    w.bytes(*e.payload);
  } else {
    w.u32(0);
  }
  w.bits(e.tag);
}

struct Encoder {
  ByteWriter& w;

  void operator()(const RequestItem& r) const {
    w.u8(1);
    w.u64(r.req_id);
    w.u32(r.src);
    w.u32(r.dst);
    w.u32(r.share_len);
    w.u32(static_cast<std::uint32_t>(r.share_synd.size()));
    for (const auto& s : r.share_synd) w.bits(s);
  }
  void operator()(const ProposeItem& p) const {
    w.u8(2);
    w.bytes(p.proposal.encode());
  }
  void operator()(const VoteItem& v) const {
    w.u8(3);
    w.u64(v.view);
    w.bytes({reinterpret_cast<const std::uint8_t*>(v.digest.data()), v.digest.size()});
    put_echo(w, v.echo);
    w.u32(static_cast<std::uint32_t>(v.kx.size()));
    for (const auto& k : v.kx) {
      w.u32(k.scheme);
      w.u32(k.path);
      w.u32(k.hop);
      w.bits(k.synd);
    }
  }
  void operator()(const VerifyItem& v) const {
    w.u8(4);
    w.u64(v.view);
    w.u32(static_cast<std::uint32_t>(v.vote_sns.size()));
    for (auto [node, sn] : v.vote_sns) {
      w.u32(node);
      w.u64(sn);
    }
  }
  void operator()(const ViewChangeItem& v) const {
    w.u8(5);
    w.u64(v.view);
    w.u8(static_cast<std::uint8_t>(v.trigger));
    w.u8(v.evidence ? 1 : 0);
    if (v.evidence) {
      put_echo(w, v.evidence->first);
      put_echo(w, v.evidence->second);
    }
  }
  void operator()(const KxItem& k) const {
    w.u8(6);
    w.u64(k.view);
    w.bytes({reinterpret_cast<const std::uint8_t*>(k.digest.data()), k.digest.size()});
    w.u32(k.scheme);
    w.u32(k.path);
    w.u32(k.hop);
    w.bits(k.bits);
  }
  void operator()(const CipherItem& c) const {
    w.u8(7);
    w.u64(c.view);
    w.bytes({reinterpret_cast<const std::uint8_t*>(c.digest.data()), c.digest.size()});
    w.u32(c.scheme);
    w.u32(c.path);
    w.bits(c.cipher);
    w.bits(c.synd_seed);
  }
  void operator()(const VerdictItem& v) const {
    w.u8(8);
    w.u64(v.view);
    w.bytes({reinterpret_cast<const std::uint8_t*>(v.digest.data()), v.digest.size()});
    w.u32(v.scheme);
    w.u64(v.req_id);
    w.u8(v.success ? 1 : 0);
    w.bytes(v.clean);
    w.u32(static_cast<std::uint32_t>(v.blamed.size()));
    for (NodeId b : v.blamed) w.u32(b);
  }
};

}  // namespace

const char* item_name(const Item& item) {
  static const char* names[] = {"request", "propose", "vote", "verify", "viewchange", "kx", "cipher", "verdict"};
  return names[item.index()];
}

Bytes encode_payload(std::uint64_t sn, NodeId sender, std::uint64_t round, const std::vector<Item>& items) {
  ByteWriter w;
  w.tag("QKDN");
  w.u64(sn);
  w.u32(sender);
  w.u64(round);
  w.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& it : items) std::visit(Encoder{w}, it);
  return w.take();
}

}  // namespace qkdnet::proto

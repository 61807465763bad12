#include "qkdnet/simulation.hpp"

#include <algorithm>
#include <memory>
#include <tuple>

#include "qkdnet/consensus.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/keydist.hpp"
#include "qkdnet/protocol.hpp"
#include "qkdnet/rng.hpp"

namespace qkdnet::sim {

Behavior parse_behavior(const std::string& s) {
  if (s == "honest" || s == "none") return Behavior::honest;
  if (s == "equivocate") return Behavior::equivocate;
  if (s == "wrong_kx") return Behavior::wrong_kx;
  if (s == "silent") return Behavior::silent;
  throw ConfigError("unknown adversary behavior: " + s);
}

const char* behavior_name(Behavior b) {
  switch (b) {
    case Behavior::honest:
      return "honest";
    case Behavior::equivocate:
      return "equivocate";
    case Behavior::wrong_kx:
      return "wrong_kx";
    case Behavior::silent:
      return "silent";
  }
  return "?";
}

namespace {

using consensus::Timing;
using consensus::Trigger;
using consensus::ViewState;
using proto::Envelope;
using proto::Item;
using proto::LeaderEcho;
using EnvPtr = std::shared_ptr<const Envelope>;
using DiscPtr = std::shared_ptr<const auth::Disclosure>;
using HopKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;  // scheme, path, position
using Evidence = std::pair<LeaderEcho, LeaderEcho>;

constexpr std::uint64_t kNodeLabel = 0x4e4f4445;       // "NODE"
constexpr std::uint64_t kCoalitionLabel = 0x434f414c;  // "COAL"
constexpr std::uint64_t kHistory = 12;                 // rounds of received state kept

std::string hex_digest(const std::string& d) {
  static const char* hexd = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < 4 && i < d.size(); ++i) {
    const auto c = static_cast<unsigned char>(d[i]);
    out += hexd[c >> 4];
    out += hexd[c & 15];
  }
  return out;
}

std::string view_subject(std::uint64_t view) { return "view:" + std::to_string(view); }
std::string req_subject(std::uint64_t req) { return "req:" + std::to_string(req); }

std::uint64_t next_slot(std::uint64_t from, std::size_t pipeline) {
  while (consensus::pipeline_schedule(from) != pipeline) ++from;
  return from;
}

bool same_bytes(const std::shared_ptr<const Bytes>& a, const std::shared_ptr<const Bytes>& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

struct GraphEntry {
  auth::ValidationKeyGraph g;
  std::map<std::pair<NodeId, NodeId>, bool> trust;
  explicit GraphEntry(auth::ValidationKeyGraph graph) : g(std::move(graph)) {}
};

struct SourceRequest {
  std::uint64_t req_id = 0;
  NodeId dst = 0;
  keydist::Shares shares;
};

struct Bundle {
  std::shared_ptr<const consensus::Proposal> proposal;
  std::string digest;
  std::uint64_t view = 0;
  std::uint64_t commit_round = 0;
};

struct Pipe {
  std::optional<ViewState> vs;
  std::uint64_t next_start = 0;
  std::uint64_t attempts = 0;
  std::uint64_t crs = 0;
  std::uint64_t failed_since = 0;
  std::map<std::uint64_t, consensus::RequestInfo> pending;
};

struct Node {
  NodeId id = 0;
  bool malicious = false;
  std::size_t k = 0;
  Rng rng{0};

  std::map<std::uint64_t, RawKey> raw;
  std::map<std::uint64_t, AuthKey> akey;
  std::map<std::uint64_t, DiscPtr> my_disc;
  std::map<std::uint64_t, std::map<NodeId, EnvPtr>> recv;
  std::map<std::uint64_t, std::map<NodeId, DiscPtr>> disc;
  std::map<std::uint64_t, std::shared_ptr<GraphEntry>> graphs;

  std::array<Pipe, consensus::kPipelines> pipes;
  std::vector<Item> out;
  std::optional<consensus::Proposal> equivocal;  // second proposal of an equivocating leader

  std::map<std::uint64_t, std::vector<std::pair<NodeId, std::uint64_t>>> vote_sns;  // view -> fresh votes
  std::map<std::uint64_t, LeaderEcho> first_echo;                                 // view -> first valid echo
  std::map<std::uint64_t, Evidence> evidence;

  std::map<std::uint64_t, SourceRequest> sourced;
  std::set<std::uint64_t> committed_reqs;
  std::map<std::string, std::map<HopKey, BitString>> my_kx;
  std::map<std::string, std::map<HopKey, BitString>> kx_commit;
  std::map<std::string, std::map<HopKey, BitString>> kx_recv;
  std::map<std::string, std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<BitString, BitString>>> cipher_recv;
  std::map<std::string, std::map<std::uint32_t, proto::VerdictItem>> verdict_recv;
  std::map<std::string, Bundle> bundles;
};

struct Roles {
  std::map<NodeId, std::vector<std::uint32_t>> as_src, as_dst;
  std::map<NodeId, std::vector<HopKey>> as_relay;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg);
  SimResult run();

 private:
  void open_round(std::uint64_t t);
  void step(Node& n, std::uint64_t t);
  void send(Node& n, std::uint64_t t);

  std::shared_ptr<GraphEntry> graph_for(Node& n, std::uint64_t r);
  bool trusted(GraphEntry& ge, NodeId src, NodeId dst);
  bool verify_with(const std::shared_ptr<const Bytes>& payload, const BitString& tag, NodeId sender,
                   std::uint64_t round, const DiscPtr& d);
  bool authentic(Node& n, const std::shared_ptr<const Bytes>& payload, const BitString& tag, NodeId sender,
                 std::uint64_t round);

  void handle_confirmed(Node& n, const Envelope& env, std::uint64_t t);
  void handle_fresh(Node& n, const Envelope& env, std::uint64_t t);
  void check_echo(Node& n, ViewState& vs, const LeaderEcho& echo, std::uint64_t t);
  void adopt_evidence(Node& n, ViewState& vs, const Evidence& ev, std::uint64_t t);
  void start_vc(Node& n, ViewState& vs, Trigger why, std::uint64_t t);
  void do_vote(Node& n, ViewState& vs, std::uint64_t t);
  void open_view(Node& n, std::size_t p, std::uint64_t t);
  void tick_pipe(Node& n, std::size_t p, std::uint64_t t);
  void commit(Node& n, Pipe& pp, ViewState& vs, std::uint64_t t);
  void fail_view(Node& n, Pipe& pp, ViewState& vs, std::uint64_t t, const char* why);
  void tick_keydist(Node& n, std::uint64_t t);
  void source_send(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t);
  void dest_finish(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t);
  void source_finish(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t);
  void new_request(Node& n, NodeId dst, std::uint64_t t);

  const std::optional<std::string>& structural(const consensus::Proposal& p, const std::string& digest);
  const Roles& roles(const consensus::Proposal& p, const std::string& digest);
  ViewRecord& record(const ViewState& vs);
  KeyOutcome* outcome(std::uint64_t req_id);
  LinkId link(NodeId a, NodeId b) const { return *fabric_->link_between(a, b); }
  bool honest(NodeId v) const { return !nodes_[v].malicious; }
  void log(std::uint64_t t, NodeId v, std::string ev, std::string subj, std::string outcome,
           EventLog::Level l = EventLog::Level::protocol) {
    res_.log.add(l, t, v, std::move(ev), std::move(subj), std::move(outcome));
  }

  SimConfig cfg_;
  SimResult res_;
  SecurityParams sec_;
  std::unique_ptr<KeyFabric> fabric_;
  auth::LinkEnds ends_;
  keydist::PadBook pads_;
  std::unique_ptr<simnet::Network<Envelope>> net_;
  std::unique_ptr<consensus::PathPlanner> planner_;
  std::vector<Node> nodes_;
  simnet::RequestStream stream_;
  std::size_t paths_ = 1;
  std::uint64_t next_req_ = 0;

  std::map<std::uint64_t, std::size_t> view_index_;
  std::map<std::uint64_t, std::size_t> key_index_;
  std::map<std::string, std::uint64_t> bundle_round_;  // digest -> first commit round

  struct VerifyKey {
    const void* payload;
    const void* disc;
    std::uint64_t tag;
    auto operator<=>(const VerifyKey&) const = default;
  };
  struct VerifyVal {
    bool ok;
    std::shared_ptr<const Bytes> keep_payload;
    DiscPtr keep_disc;
  };
  std::map<std::uint64_t, std::map<VerifyKey, VerifyVal>> verify_cache_;
  std::map<std::uint64_t, std::map<std::vector<const void*>, std::shared_ptr<GraphEntry>>> graph_cache_;
  std::map<std::string, std::optional<std::string>> legit_cache_;
  std::map<std::string, Roles> roles_cache_;

  // One decoded copy of each leader broadcast, shared by all replicas.
  struct Interned {
    std::shared_ptr<const Bytes> keep_payload;
    std::shared_ptr<const consensus::Proposal> proposal;
    std::string digest;
    std::uint64_t round = 0;
  };
  std::map<const void*, Interned> interned_;
  const Interned& intern(const Envelope& env, const consensus::Proposal& p, std::uint64_t t) {
    auto [it, fresh] = interned_.try_emplace(env.payload.get());
    if (fresh) it->second = Interned{env.payload, std::make_shared<const consensus::Proposal>(p), p.digest(), t};
    return it->second;
  }
};

Engine::Engine(const SimConfig& cfg) : cfg_(cfg), res_() {
  res_.log = EventLog(cfg.log_level);
  cfg_.auth.validate();
  if (cfg_.share_len <= cfg_.security.s) throw ParameterError("share_len must exceed the PA margin s");
  if (cfg_.topology) {
    res_.topology = simnet::make_topology(*cfg_.topology);
  } else {
    res_.topology = simnet::gen_topology(cfg_.N, cfg_.f, cfg_.seed, cfg_.sampler);
  }
  const std::size_t N = res_.topology.N;
  sec_ = cfg_.security;
  sec_.f = cfg_.f;
  sec_.C = res_.topology.C;
  sec_.kau_len = cfg_.auth.kau_len;
  sec_.validate(N);
  paths_ = cfg_.f + 1 + cfg_.extra_paths;

  fabric_ = std::make_unique<KeyFabric>(res_.topology.graph, cfg_.seed);
  ends_ = auth::link_ends(*fabric_);
  planner_ = std::make_unique<consensus::PathPlanner>(res_.topology.graph, paths_);
  stream_ = simnet::RequestStream{cfg_.lambda, cfg_.seed};

  std::set<NodeId> coalition;
  if (cfg_.coalition) {
    coalition = *cfg_.coalition;
  } else if (cfg_.behavior != Behavior::honest || cfg_.coalition_has_first_leader) {
    Rng rng(derive_seed(cfg_.seed, {kCoalitionLabel}));
    if (cfg_.coalition_has_first_leader && cfg_.f > 0) coalition.insert(0);
    while (coalition.size() < cfg_.f) coalition.insert(static_cast<NodeId>(rng.below(N)));
  }
  for (NodeId v : coalition) {
    if (v >= N) throw ConfigError("coalition member out of range");
  }
  res_.coalition = coalition;
  net_ = std::make_unique<simnet::Network<Envelope>>(N, coalition);

  nodes_.resize(N);
  res_.k.assign(N, 0);
  for (NodeId v = 0; v < N; ++v) {
    Node& n = nodes_[v];
    n.id = v;
    n.malicious = coalition.count(v) != 0;
    n.rng = Rng(derive_seed(cfg_.seed, {kNodeLabel, v}));
    const std::size_t x = fabric_->active_degree(v);
    n.k = x > cfg_.f ? compute_k(sec_, x) : 0;
    res_.k[v] = n.k;
    res_.k_max = std::max(res_.k_max, n.k);
    for (std::size_t p = 0; p < consensus::kPipelines; ++p) {
      n.pipes[p].next_start = p;
      n.pipes[p].crs = p;
    }
  }
}

void Engine::open_round(std::uint64_t t) {
  std::vector<std::size_t> len(fabric_->num_links(), 0);
  for (const auto& l : fabric_->links()) len[l.id] = std::max(nodes_[l.a].k, nodes_[l.b].k);
  fabric_->open_round(t, len);
  for (Node& n : nodes_) {
    if (n.k == 0) continue;
    RawKey raw = build_raw_key(*fabric_, n.id, t, n.k);
    n.akey[t] = derive_auth_key(raw, cfg_.auth.kau_len, pa_round_seed(cfg_.seed, n.id, t));
    n.raw[t] = std::move(raw);
  }
}

std::shared_ptr<GraphEntry> Engine::graph_for(Node& n, std::uint64_t r) {
  auto it = n.graphs.find(r);
  if (it != n.graphs.end()) return it->second;
  std::vector<const void*> key;
  std::vector<const auth::Disclosure*> list;
  for (const auto& [sender, d] : n.disc[r]) {
    key.push_back(d.get());
    list.push_back(d.get());
  }
  auto& slot = graph_cache_[r][key];
  if (!slot) {
    slot = std::make_shared<GraphEntry>(auth::build_validation_graph(list, nodes_.size(), ends_));
  }
  n.graphs[r] = slot;
  return slot;
}

bool Engine::trusted(GraphEntry& ge, NodeId src, NodeId dst) {
  auto key = std::minmax(src, dst);
  auto it = ge.trust.find(key);
  if (it != ge.trust.end()) return it->second;
  return ge.trust[key] = auth::trust_decision(ge.g, src, dst, cfg_.f);
}

bool Engine::verify_with(const std::shared_ptr<const Bytes>& payload, const BitString& tag, NodeId sender,
                         std::uint64_t round, const DiscPtr& d) {
  if (!payload || !d || d->sender != sender || d->round != round) return false;
  const std::uint64_t tag_word = tag.size() == cfg_.auth.hash.tag_len ? tag.read_uint(0, tag.size()) : ~0ULL;
  VerifyKey key{payload.get(), d.get(), tag_word};
  auto& cache = verify_cache_[round];
  auto it = cache.find(key);
  if (it != cache.end()) return it->second.ok;
  const auto expected = pa_seed_for(pa_round_seed(cfg_.seed, sender, round), d->raw_bits.size(), cfg_.auth.kau_len);
  const bool ok = auth::verify_tuple(*d, *payload, tag, cfg_.auth, &expected);
  cache.emplace(key, VerifyVal{ok, payload, d});
  return ok;
}

bool Engine::authentic(Node& n, const std::shared_ptr<const Bytes>& payload, const BitString& tag, NodeId sender,
                       std::uint64_t round) {
  auto rit = n.disc.find(round);
  if (rit == n.disc.end()) return false;
  auto dit = rit->second.find(sender);
  if (dit == rit->second.end()) return false;
  if (!verify_with(payload, tag, sender, round, dit->second)) return false;
  return trusted(*graph_for(n, round), sender, n.id);
}

const std::optional<std::string>& Engine::structural(const consensus::Proposal& p, const std::string& digest) {
  auto it = legit_cache_.find(digest);
  if (it != legit_cache_.end()) return it->second;
  return legit_cache_[digest] = consensus::check_legitimacy(p, res_.topology.graph, cfg_.f);
}

const Roles& Engine::roles(const consensus::Proposal& p, const std::string& digest) {
  auto it = roles_cache_.find(digest);
  if (it != roles_cache_.end()) return it->second;
  Roles r;
  for (std::uint32_t i = 0; i < p.schemes.size(); ++i) {
    const auto& s = p.schemes[i];
    r.as_src[s.src].push_back(i);
    r.as_dst[s.dst].push_back(i);
    for (std::uint32_t j = 0; j < s.paths.size(); ++j) {
      for (std::uint32_t h = 1; h + 1 < s.paths[j].size(); ++h) r.as_relay[s.paths[j][h]].emplace_back(i, j, h);
    }
  }
  return roles_cache_[digest] = std::move(r);
}

ViewRecord& Engine::record(const ViewState& vs) {
  auto it = view_index_.find(vs.view);
  if (it == view_index_.end()) {
    ViewRecord r;
    r.view = vs.view;
    r.pipeline = vs.pipeline;
    r.start = vs.start;
    r.leader = vs.leader;
    r.leader_honest = honest(vs.leader);
    it = view_index_.emplace(vs.view, res_.views.size()).first;
    res_.views.push_back(std::move(r));
  }
  return res_.views[it->second];
}

KeyOutcome* Engine::outcome(std::uint64_t req_id) {
  auto it = key_index_.find(req_id);
  return it == key_index_.end() ? nullptr : &res_.keys[it->second];
}

void Engine::start_vc(Node& n, ViewState& vs, Trigger why, std::uint64_t t) {
  if (vs.vc_trigger || vs.done()) return;
  vs.vc_trigger = why;
  vs.vc_since = t;
  log(t, n.id, "viewchange", view_subject(vs.view), std::string("trigger:") + consensus::trigger_name(why));
}

void Engine::adopt_evidence(Node& n, ViewState& vs, const Evidence& ev, std::uint64_t t) {
  if (vs.equivocation || vs.done()) return;
  const auto& [a, b] = ev;
  if (a.leader != vs.leader || b.leader != vs.leader || a.round != vs.start || b.round != vs.start) return;
  if (same_bytes(a.payload, b.payload)) return;
  if (!authentic(n, a.payload, a.tag, vs.leader, vs.start) || !authentic(n, b.payload, b.tag, vs.leader, vs.start)) {
    log(t, n.id, "equivocation", view_subject(vs.view), "evidence_rejected");
    return;
  }
  vs.equivocation = true;
  n.evidence[vs.view] = ev;
  log(t, n.id, "equivocation", view_subject(vs.view), "detected");
  start_vc(n, vs, Trigger::equivocation, t);
}

void Engine::check_echo(Node& n, ViewState& vs, const LeaderEcho& echo, std::uint64_t t) {
  if (echo.leader != vs.leader || echo.round != vs.start) return;
  if (!authentic(n, echo.payload, echo.tag, vs.leader, vs.start)) {
    log(t, n.id, "echo", view_subject(vs.view), "invalid", EventLog::Level::full);
    return;
  }
  LeaderEcho mine;
  if (vs.proposal_payload) {
    mine = LeaderEcho{vs.leader, vs.start, vs.proposal_payload, vs.proposal_tag};
  } else {
    auto it = n.first_echo.find(vs.view);
    if (it == n.first_echo.end()) {
      n.first_echo[vs.view] = echo;
      return;
    }
    mine = it->second;
  }
  if (!same_bytes(mine.payload, echo.payload)) adopt_evidence(n, vs, {mine, echo}, t);
}

void Engine::do_vote(Node& n, ViewState& vs, std::uint64_t t) {
  const consensus::Proposal& p = *vs.proposal;
  std::optional<std::string> why = structural(p, vs.digest);
  if (!why) why = consensus::check_legitimacy(consensus::Proposal{p.view, p.bundle, p.leader, {}},
                                              res_.topology.graph, cfg_.f);
  if (!why) {
    // Every scheme must match a request this replica has confirmed.
    const auto& pending = n.pipes[vs.pipeline].pending;
    for (const auto& s : p.schemes) {
      auto it = pending.find(s.req_id);
      if (it == pending.end()) {
        why = "unknown request";
        break;
      }
      const auto& r = it->second;
      if (r.src != s.src || r.dst != s.dst || r.share_len != s.share_len.front() || r.share_synd != s.share_synd) {
        why = "scheme does not match the request";
        break;
      }
    }
  }
  if (why) {
    log(t, n.id, "vote", view_subject(vs.view), "refused:" + *why);
    return;
  }
  proto::VoteItem v;
  v.view = vs.view;
  v.digest = vs.digest;
  v.echo = LeaderEcho{vs.leader, vs.start, vs.proposal_payload, vs.proposal_tag};
  const Roles& r = roles(p, vs.digest);
  if (auto it = r.as_relay.find(n.id); it != r.as_relay.end()) {
    for (const auto& [i, j, h] : it->second) {
      const auto& s = p.schemes[i];
      const Path& path = s.paths[j];
      const std::size_t len = s.share_len[j];
      const BitString& k_in = pads_.pad(*fabric_, vs.digest, i, j, h - 1, link(path[h - 1], path[h]), len);
      const BitString& k_out = pads_.pad(*fabric_, vs.digest, i, j, h, link(path[h], path[h + 1]), len);
      const keydist::KeyXor kx = keydist::relay_kx(n.id, j, h, k_in, k_out);
      const std::size_t slen = std::min(cfg_.synd_len, len);
      const auto synd =
          crypto::make_syndrome(kx.bits, keydist::kx_synd_seed(cfg_.seed, vs.digest, i, j, h, len, slen), slen);
      v.kx.push_back({i, j, h, synd.value});
      n.my_kx[vs.digest][{i, j, h}] = kx.bits;
    }
  }
  log(t, n.id, "vote", view_subject(vs.view), "cast:" + hex_digest(vs.digest));
  n.out.emplace_back(std::move(v));
  vs.voted = true;
}

void Engine::handle_fresh(Node& n, const Envelope& env, std::uint64_t t) {
  for (const Item& item : env.items) {
    if (const auto* pi = std::get_if<proto::ProposeItem>(&item)) {
      auto& pp = n.pipes[pi->proposal.view % consensus::kPipelines];
      if (!pp.vs || pp.vs->done()) continue;
      ViewState& vs = *pp.vs;
      if (pi->proposal.view != vs.view || env.sender != vs.leader || env.round != vs.start || vs.proposal) continue;
      const Interned& in = intern(env, pi->proposal, t);
      vs.proposal = in.proposal;
      vs.proposal_payload = env.payload;
      vs.proposal_tag = env.tag;
      vs.digest = in.digest;
      log(t, n.id, "propose", view_subject(vs.view), "received:" + hex_digest(vs.digest));
      if (t == vs.start + Timing::vote) do_vote(n, vs, t);
    } else if (const auto* vi = std::get_if<proto::VoteItem>(&item)) {
      auto& pp = n.pipes[vi->view % consensus::kPipelines];
      if (!pp.vs || pp.vs->done() || pp.vs->view != vi->view || env.round != pp.vs->start + Timing::vote) continue;
      n.vote_sns[vi->view].emplace_back(env.sender, env.sn);
      check_echo(n, *pp.vs, vi->echo, t);
    } else if (const auto* vc = std::get_if<proto::ViewChangeItem>(&item)) {
      auto& pp = n.pipes[vc->view % consensus::kPipelines];
      if (pp.vs && pp.vs->view == vc->view && vc->evidence) adopt_evidence(n, *pp.vs, *vc->evidence, t);
    }
  }
}

void Engine::handle_confirmed(Node& n, const Envelope& env, std::uint64_t t) {
  const std::uint64_t r = env.round;
  for (const Item& item : env.items) {
    if (const auto* ri = std::get_if<proto::RequestItem>(&item)) {
      if (ri->src != env.sender || ri->dst >= nodes_.size() || ri->src == ri->dst || ri->share_len == 0 ||
          ri->share_synd.size() != paths_ || n.committed_reqs.count(ri->req_id)) {
        continue;
      }
      n.pipes[consensus::pipeline_schedule(r)].pending[ri->req_id] =
          consensus::RequestInfo{ri->req_id, ri->src, ri->dst, ri->share_len, ri->share_synd};
    } else if (const auto* pi = std::get_if<proto::ProposeItem>(&item)) {
      auto& pp = n.pipes[pi->proposal.view % consensus::kPipelines];
      if (!pp.vs || pp.vs->view != pi->proposal.view || env.sender != pp.vs->leader || r != pp.vs->start) continue;
      if (same_bytes(pp.vs->proposal_payload, env.payload)) {
        pp.vs->proposal_confirmed = true;
        log(t, n.id, "verify", view_subject(pp.vs->view), "proposal_confirmed");
      }
    } else if (const auto* vi = std::get_if<proto::VoteItem>(&item)) {
      auto& pp = n.pipes[vi->view % consensus::kPipelines];
      if (!pp.vs || pp.vs->view != vi->view || r != pp.vs->start + Timing::vote) continue;
      ViewState& vs = *pp.vs;
      if (!vs.proposal || vi->digest != vs.digest) {
        log(t, n.id, "vote", view_subject(vs.view), "other_digest", EventLog::Level::full);
        continue;
      }
      vs.voter_keys[env.sender] = n.disc[r][env.sender]->raw_bits;
      for (const auto& kc : vi->kx) {
        if (kc.scheme >= vs.proposal->schemes.size()) continue;
        const auto& s = vs.proposal->schemes[kc.scheme];
        if (kc.path >= s.paths.size() || kc.hop == 0 || kc.hop + 1 >= s.paths[kc.path].size()) continue;
        if (s.paths[kc.path][kc.hop] != env.sender || s.src != n.id) continue;  // only the source checks KX
        n.kx_commit[vs.digest][{kc.scheme, kc.path, kc.hop}] = kc.synd;
      }
    } else if (const auto* vf = std::get_if<proto::VerifyItem>(&item)) {
      auto& pp = n.pipes[vf->view % consensus::kPipelines];
      if (pp.vs && pp.vs->view == vf->view) pp.vs->verify_from.insert(env.sender);
    } else if (const auto* vc = std::get_if<proto::ViewChangeItem>(&item)) {
      auto& pp = n.pipes[vc->view % consensus::kPipelines];
      if (!pp.vs || pp.vs->view != vc->view) continue;
      pp.vs->vc_from.insert(env.sender);
      if (vc->evidence) adopt_evidence(n, *pp.vs, *vc->evidence, t);
    } else if (const auto* kx = std::get_if<proto::KxItem>(&item)) {
      auto bit = n.bundles.find(kx->digest);
      if (bit == n.bundles.end()) continue;
      const auto& schemes = bit->second.proposal->schemes;
      if (kx->scheme >= schemes.size() || schemes[kx->scheme].src != n.id) continue;
      if (kx->path >= schemes[kx->scheme].paths.size()) continue;
      const Path& path = schemes[kx->scheme].paths[kx->path];
      if (kx->hop == 0 || kx->hop + 1 >= path.size() || path[kx->hop] != env.sender) continue;
      n.kx_recv[kx->digest][{kx->scheme, kx->path, kx->hop}] = kx->bits;
    } else if (const auto* ci = std::get_if<proto::CipherItem>(&item)) {
      auto bit = n.bundles.find(ci->digest);
      if (bit == n.bundles.end()) continue;
      const auto& schemes = bit->second.proposal->schemes;
      if (ci->scheme >= schemes.size() || schemes[ci->scheme].src != env.sender) continue;
      if (schemes[ci->scheme].dst != n.id) continue;
      n.cipher_recv[ci->digest][{ci->scheme, ci->path}] = {ci->cipher, ci->synd_seed};
    } else if (const auto* vd = std::get_if<proto::VerdictItem>(&item)) {
      auto bit = n.bundles.find(vd->digest);
      if (bit == n.bundles.end()) continue;
      const auto& schemes = bit->second.proposal->schemes;
      if (vd->scheme >= schemes.size() || schemes[vd->scheme].dst != env.sender) continue;
      if (schemes[vd->scheme].src != n.id) continue;
      n.verdict_recv[vd->digest][vd->scheme] = *vd;
    }
  }
}

void Engine::open_view(Node& n, std::size_t p, std::uint64_t t) {
  Pipe& pp = n.pipes[p];
  ViewState vs;
  vs.view = p + consensus::kPipelines * pp.attempts++;
  vs.pipeline = p;
  vs.start = t;
  vs.leader = static_cast<NodeId>((pp.crs + pp.failed_since) % nodes_.size());
  vs.is_leader = vs.leader == n.id;
  pp.vs = vs;
  if (honest(n.id)) record(vs);
  if (!vs.is_leader) return;

  std::vector<consensus::RequestInfo> pending;
  for (const auto& [id, info] : pp.pending) pending.push_back(info);
  consensus::BuildResult built = consensus::propose(vs.view, n.id, pending, *planner_);
  for (auto id : built.excluded) {
    pp.pending.erase(id);
    ++res_.excluded;
    log(t, n.id, "propose", req_subject(id), "excluded:infeasible");
  }
  record(vs).had_requests = !built.proposal.schemes.empty();
  log(t, n.id, "propose", view_subject(vs.view),
      "bundle:" + std::to_string(built.proposal.schemes.size()) + ":" + hex_digest(built.proposal.digest()));
  if (n.malicious && cfg_.behavior == Behavior::equivocate) {
    consensus::Proposal other = built.proposal;
    other.bundle += 1;
    std::reverse(other.schemes.begin(), other.schemes.end());
    n.equivocal = std::move(other);
  }
  n.out.emplace_back(proto::ProposeItem{std::move(built.proposal)});
}

void Engine::commit(Node& n, Pipe& pp, ViewState& vs, std::uint64_t t) {
  vs.committed = true;
  const consensus::Proposal& p = *vs.proposal;
  if (honest(n.id)) {
    ViewRecord& rec = record(vs);
    rec.commits[n.id] = vs.digest;
    rec.commit_round[n.id] = t;
  }
  log(t, n.id, "commit", view_subject(vs.view), "committed:" + hex_digest(vs.digest));
  for (const auto& s : p.schemes) {
    pp.pending.erase(s.req_id);
    n.committed_reqs.insert(s.req_id);
    if (honest(s.src) && honest(s.dst) && !key_index_.count(s.req_id)) {
      key_index_[s.req_id] = res_.keys.size();
      KeyOutcome o;
      o.req_id = s.req_id;
      o.src = s.src;
      o.dst = s.dst;
      o.view = vs.view;
      res_.keys.push_back(std::move(o));
    }
  }
  std::vector<BitString> keys;
  for (const auto& [v, k] : vs.voter_keys) keys.push_back(k);
  pp.crs = consensus::crs_mod(keys, nodes_.size());
  pp.failed_since = 0;
  pp.next_start = next_slot(t + 1, vs.pipeline);
  n.bundles[vs.digest] = Bundle{vs.proposal, vs.digest, vs.view, t};
  bundle_round_.emplace(vs.digest, t);
  if (auto it = n.my_kx.find(vs.digest); it != n.my_kx.end()) {
    for (const auto& [hk, bits] : it->second) {
      const auto& [i, j, h] = hk;
      BitString sent = bits;
      if (n.malicious && cfg_.behavior == Behavior::wrong_kx) sent.flip(0);
      n.out.emplace_back(proto::KxItem{vs.view, vs.digest, i, j, h, std::move(sent)});
    }
    log(t, n.id, "kx", view_subject(vs.view), "sent:" + std::to_string(it->second.size()));
  }
}

void Engine::fail_view(Node& n, Pipe& pp, ViewState& vs, std::uint64_t t, const char* why) {
  vs.failed = true;
  pp.failed_since += 1;
  const std::uint64_t wait = vs.proposal_confirmed ? 0 : Timing::new_leader_wait;
  pp.next_start = next_slot(t + 1 + wait, vs.pipeline);
  if (honest(n.id)) {
    ViewRecord& rec = record(vs);
    if (std::string(why) == "advance") {
      rec.view_changed.insert(n.id);
    } else {
      rec.gave_up.insert(n.id);
    }
  }
  if (!vs.digest.empty()) n.my_kx.erase(vs.digest);
  log(t, n.id, "viewchange", view_subject(vs.view), why);
}

void Engine::tick_pipe(Node& n, std::size_t p, std::uint64_t t) {
  Pipe& pp = n.pipes[p];
  if ((!pp.vs || pp.vs->done()) && t >= pp.next_start && consensus::pipeline_schedule(t) == p) open_view(n, p, t);
  if (!pp.vs || pp.vs->done()) return;
  ViewState& vs = *pp.vs;
  const std::uint64_t s = vs.start;

  if (t == s + Timing::verify) {
    proto::VerifyItem v{vs.view, n.vote_sns[vs.view]};
    n.out.emplace_back(std::move(v));
    if (!vs.proposal_confirmed && vs.proposal_rejected) start_vc(n, vs, Trigger::verify_failure, t);
  }
  if (t == s + Timing::commit_check) {
    const auto decision =
        consensus::try_commit(vs.proposal_confirmed, vs.equivocation, vs.proposal ? vs.proposal->relays() : std::set<NodeId>{},
                              vs.voters(), cfg_.f);
    if (decision == consensus::CommitDecision::arm) {
      vs.commit_at = t + Timing::commit_timer;
      log(t, n.id, "commit", view_subject(vs.view), "timer_armed");
    } else if (decision == consensus::CommitDecision::view_change) {
      start_vc(n, vs, Trigger::equivocation, t);
    } else {
      log(t, n.id, "commit", view_subject(vs.view), "pending");
    }
  }
  if (vs.vc_from.size() >= cfg_.f + 1) {
    fail_view(n, pp, vs, t, "advance");
    return;
  }
  if (vs.commit_at && t == *vs.commit_at && !vs.equivocation) {
    commit(n, pp, vs, t);
    return;
  }
  if (t == s + Timing::leader_timeout) start_vc(n, vs, Trigger::leader_timeout, t);
  if (vs.vc_trigger) {
    if (t - vs.vc_since >= Timing::view_change_timeout) {
      vs.vc_gave_up = true;
      fail_view(n, pp, vs, t, "timeout");
      return;
    }
    proto::ViewChangeItem vc{vs.view, *vs.vc_trigger, std::nullopt};
    if (auto it = n.evidence.find(vs.view); it != n.evidence.end()) vc.evidence = it->second;
    n.out.emplace_back(std::move(vc));
  }
}

void Engine::source_send(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t) {
  const auto& s = b.proposal->schemes[i];
  auto sit = n.sourced.find(s.req_id);
  if (sit == n.sourced.end()) return;
  const SourceRequest& sr = sit->second;
  for (std::uint32_t j = 0; j < s.paths.size(); ++j) {
    const Path& path = s.paths[j];
    const std::size_t len = s.share_len[j];
    const std::size_t slen = std::min(cfg_.synd_len, len);
    std::vector<BitString> kxs;
    std::string bad;
    for (std::uint32_t h = 1; h + 1 < path.size() && bad.empty(); ++h) {
      const HopKey hk{i, j, h};
      auto got = n.kx_recv[b.digest].find(hk);
      auto committed = n.kx_commit[b.digest].find(hk);
      if (got == n.kx_recv[b.digest].end()) {
        bad = "missing_kx";
      } else if (committed == n.kx_commit[b.digest].end() ||
                 !crypto::check_syndrome(got->second,
                                         crypto::Syndrome{committed->second, slen,
                                                          keydist::kx_synd_seed(cfg_.seed, b.digest, i, j, h, len, slen)})) {
        bad = "kx_mismatch:" + std::to_string(path[h]);
      } else {
        kxs.push_back(got->second);
      }
    }
    const std::string subj = req_subject(s.req_id) + ":path" + std::to_string(j);
    if (!bad.empty()) {
      log(t, n.id, "kx", subj, "flagged:" + bad);
      continue;
    }
    const BitString& k_first = pads_.pad(*fabric_, b.digest, i, j, 0, link(path[0], path[1]), len);
    BitString cipher = keydist::source_combine(sr.shares.shares[j], k_first, kxs);
    n.out.emplace_back(proto::CipherItem{b.view, b.digest, i, j, std::move(cipher), sr.shares.syndromes[j].synd_seed});
    log(t, n.id, "share", subj, "sent");
  }
}

void Engine::dest_finish(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t) {
  const auto& s = b.proposal->schemes[i];
  std::vector<std::optional<BitString>> recovered(s.paths.size());
  std::vector<crypto::Syndrome> synd(s.paths.size());
  for (std::uint32_t j = 0; j < s.paths.size(); ++j) {
    const Path& path = s.paths[j];
    const std::size_t len = s.share_len[j];
    synd[j] = crypto::Syndrome{s.share_synd[j], s.share_synd[j].size(), {}};
    auto it = n.cipher_recv[b.digest].find({i, j});
    if (it == n.cipher_recv[b.digest].end()) continue;
    const auto last = static_cast<std::uint32_t>(path.size() - 2);
    const BitString& k_last = pads_.pad(*fabric_, b.digest, i, j, last, link(path[last], path[last + 1]), len);
    if (it->second.first.size() != len) continue;
    recovered[j] = keydist::unwrap_share(it->second.first, k_last);
    synd[j].synd_seed = it->second.second;
  }
  const auto final_seed = keydist::final_pa_seed(cfg_.seed, s.req_id, s.share_len.front(), sec_.s);
  const keydist::Reconstruction rec =
      keydist::dest_reconstruct(s.src, s.dst, s.paths, recovered, synd, cfg_.f, final_seed);
  proto::VerdictItem v;
  v.view = b.view;
  v.digest = b.digest;
  v.scheme = i;
  v.req_id = s.req_id;
  v.success = rec.success;
  for (bool c : rec.clean) v.clean.push_back(c ? 1 : 0);
  v.blamed = rec.blamed;
  log(t, n.id, "reconstruct", req_subject(s.req_id), rec.success ? "key" : "failed");
  if (KeyOutcome* o = outcome(s.req_id)) {
    o->dst_done = true;
    o->dst_ok = rec.success;
    if (rec.key) o->dst_key = rec.key->bits;
    o->blamed = rec.blamed;
  }
  n.out.emplace_back(std::move(v));
}

void Engine::source_finish(Node& n, const Bundle& b, std::uint32_t i, std::uint64_t t) {
  const auto& s = b.proposal->schemes[i];
  auto sit = n.sourced.find(s.req_id);
  if (sit == n.sourced.end()) return;
  auto vit = n.verdict_recv[b.digest].find(i);
  bool ok = false;
  BitString key;
  if (vit != n.verdict_recv[b.digest].end() && vit->second.success && vit->second.clean.size() == s.paths.size()) {
    std::vector<bool> clean;
    std::size_t good = 0;
    for (auto c : vit->second.clean) {
      clean.push_back(c != 0);
      good += c != 0;
    }
    if (good >= cfg_.f + 1) {
      const auto final_seed = keydist::final_pa_seed(cfg_.seed, s.req_id, s.share_len.front(), sec_.s);
      key = crypto::pa_compress(keydist::combine_clean(sit->second.shares.shares, clean), final_seed);
      ok = true;
    }
  }
  log(t, n.id, "endkey", req_subject(s.req_id), ok ? "key" : "failed");
  if (KeyOutcome* o = outcome(s.req_id)) {
    o->src_done = true;
    o->src_ok = ok;
    o->src_key = key;
  }
  n.sourced.erase(sit);
}

void Engine::tick_keydist(Node& n, std::uint64_t t) {
  for (auto it = n.bundles.begin(); it != n.bundles.end();) {
    const Bundle& b = it->second;
    const Roles& r = roles(*b.proposal, b.digest);
    const std::uint64_t c = b.commit_round;
    if (t == c + 2) {
      if (auto s = r.as_src.find(n.id); s != r.as_src.end())
        for (auto i : s->second) source_send(n, b, i, t);
    } else if (t == c + 4) {
      if (auto s = r.as_dst.find(n.id); s != r.as_dst.end())
        for (auto i : s->second) dest_finish(n, b, i, t);
    } else if (t == c + 6) {
      if (auto s = r.as_src.find(n.id); s != r.as_src.end())
        for (auto i : s->second) source_finish(n, b, i, t);
    }
    if (t >= c + 6) {
      n.my_kx.erase(b.digest);
      n.kx_commit.erase(b.digest);
      n.kx_recv.erase(b.digest);
      n.cipher_recv.erase(b.digest);
      n.verdict_recv.erase(b.digest);
      it = n.bundles.erase(it);
    } else {
      ++it;
    }
  }
}

void Engine::new_request(Node& n, NodeId dst, std::uint64_t t) {
  SourceRequest sr;
  sr.req_id = next_req_++;
  sr.dst = dst;
  const BitString secret = n.rng.bits(cfg_.share_len);
  sr.shares = keydist::split_shares(secret, paths_, n.rng, cfg_.synd_len);
  proto::RequestItem item{sr.req_id, n.id, dst, static_cast<std::uint32_t>(cfg_.share_len), {}};
  for (const auto& sy : sr.shares.syndromes) item.share_synd.push_back(sy.value);
  ++res_.requests;
  log(t, n.id, "request", req_subject(sr.req_id), "to:" + std::to_string(dst), EventLog::Level::full);
  n.sourced.emplace(sr.req_id, std::move(sr));
  n.out.emplace_back(std::move(item));
}

void Engine::step(Node& n, std::uint64_t t) {
  n.out.clear();
  n.equivocal.reset();
  if (n.k == 0 || (n.malicious && cfg_.behavior == Behavior::silent)) return;

  for (const EnvPtr& env : net_->deliver(n.id, t)) {
    if (!auth::accept_window_check(env->round, t)) {
      log(t, n.id, "accept", "from:" + std::to_string(env->sender), "discard:window", EventLog::Level::full);
      continue;
    }
    auto& slot = n.recv[env->round][env->sender];
    if (slot) {
      log(t, n.id, "accept", "from:" + std::to_string(env->sender), "discard:duplicate");
      continue;
    }
    slot = env;
    if (env->disclosure) {
      if (env->disclosure->sender != env->sender || env->disclosure->round + 2 != t) {
        log(t, n.id, "disclosure", "from:" + std::to_string(env->sender), "discard:late");
      } else {
        n.disc[t - 2][env->sender] = env->disclosure;
      }
    }
  }

  if (t >= 2) {
    const std::uint64_t r = t - 2;
    if (auto md = n.my_disc.find(r); md != n.my_disc.end()) n.disc[r][n.id] = md->second;
    for (const auto& [sender, env] : n.recv[r]) {
      const bool ok = authentic(n, env->payload, env->tag, sender, r);
      log(t, n.id, "verify", "from:" + std::to_string(sender) + ":round:" + std::to_string(r),
          ok ? "trusted" : "rejected", EventLog::Level::full);
      if (ok) {
        handle_confirmed(n, *env, t);
      } else {
        for (auto& pp : n.pipes) {
          if (pp.vs && !pp.vs->done() && pp.vs->leader == sender && pp.vs->start == r) {
            pp.vs->proposal_rejected = true;
            log(t, n.id, "verify", view_subject(pp.vs->view), "proposal_rejected");
          }
        }
      }
    }
  }
  if (t >= 1) {
    for (const auto& [sender, env] : n.recv[t - 1]) handle_fresh(n, *env, t);
  }
  for (std::size_t p = 0; p < consensus::kPipelines; ++p) tick_pipe(n, p, t);
  tick_keydist(n, t);

  const std::uint64_t arrival_end = cfg_.arrival_rounds == 0 ? cfg_.rounds : cfg_.arrival_rounds;
  if (t < arrival_end && cfg_.lambda > 0.0) {
    for (NodeId dst = 0; dst < nodes_.size(); ++dst) {
      if (dst == n.id) continue;
      const std::uint64_t count = simnet::poisson_arrivals(stream_, {n.id, dst}, t);
      for (std::uint64_t i = 0; i < count; ++i) new_request(n, dst, t);
    }
  }
}

void Engine::send(Node& n, std::uint64_t t) {
  if (n.k == 0 || (n.malicious && cfg_.behavior == Behavior::silent)) return;
  DiscPtr disclosure;
  if (t >= 1) {
    if (auto it = n.raw.find(t - 1); it != n.raw.end()) {
      disclosure = std::make_shared<const auth::Disclosure>(auth::make_disclosure(it->second, n.akey.at(t - 1)));
      n.my_disc[t - 1] = disclosure;
    }
  }
  const AuthKey& key = n.akey.at(t);
  auto make = [&](std::vector<Item> items) {
    auto env = std::make_shared<Envelope>();
    env->sn = t;
    env->sender = n.id;
    env->round = t;
    env->payload = std::make_shared<const Bytes>(proto::encode_payload(env->sn, n.id, t, items));
    env->tag = auth::make_tag(key, *env->payload, cfg_.auth);
    env->items = std::move(items);
    env->disclosure = disclosure;
    return std::shared_ptr<const Envelope>(std::move(env));
  };
  if (!n.equivocal) {
    net_->broadcast(n.id, t, make(n.out));
    return;
  }
  // Equivocating leader: the second half of the honest nodes gets the other proposal.
  std::vector<Item> other = n.out;
  for (Item& it : other) {
    if (std::holds_alternative<proto::ProposeItem>(it)) it = proto::ProposeItem{*n.equivocal};
  }
  std::vector<NodeId> half_a, half_b;
  std::size_t h = 0;
  for (NodeId v = 0; v < nodes_.size(); ++v) {
    if (nodes_[v].malicious) {
      half_a.push_back(v);
    } else {
      (h++ % 2 == 0 ? half_a : half_b).push_back(v);
    }
  }
  net_->broadcast(n.id, t, make(n.out), half_a);
  net_->broadcast(n.id, t, make(std::move(other)), half_b);
  for (auto& rec : res_.views) {
    if (rec.start == t && rec.leader == n.id) rec.equivocated = true;
  }
  log(t, n.id, "propose", "round:" + std::to_string(t), "equivocated");
}

SimResult Engine::run() {
  const std::uint64_t E = fabric_->num_links();
  for (std::uint64_t t = 0; t < cfg_.rounds; ++t) {
    open_round(t);
    for (Node& n : nodes_) step(n, t);
    for (Node& n : nodes_) send(n, t);

    const std::uint64_t bound = E * res_.k_max * (t + 1);
    if (fabric_->consumed(Category::consensus) > bound) {
      res_.bound_held = false;
      res_.violations.push_back("consensus consumption above E*k_max*steps at round " + std::to_string(t));
    }

    // Drop state that can no longer be referenced. Envelopes are only read
    // one round (fresh) and two rounds (confirmed) after they were sent.
    if (t >= 1) {
      for (Node& n : nodes_) n.recv.erase(n.recv.begin(), n.recv.lower_bound(t - 1));
      verify_cache_.erase(verify_cache_.begin(), verify_cache_.lower_bound(t - 1));
    }
    if (t >= kHistory) {
      const std::uint64_t keep = t - kHistory;
      for (Node& n : nodes_) {
        n.raw.erase(n.raw.begin(), n.raw.lower_bound(keep));
        n.akey.erase(n.akey.begin(), n.akey.lower_bound(keep));
        n.my_disc.erase(n.my_disc.begin(), n.my_disc.lower_bound(keep));
        n.disc.erase(n.disc.begin(), n.disc.lower_bound(keep));
        n.graphs.erase(n.graphs.begin(), n.graphs.lower_bound(keep));
        n.vote_sns.erase(n.vote_sns.begin(), n.vote_sns.lower_bound(keep > 30 ? keep - 30 : 0));
      }
      graph_cache_.erase(graph_cache_.begin(), graph_cache_.lower_bound(keep));
      std::erase_if(interned_, [&](const auto& kv) { return kv.second.round < t - 2; });
      fabric_->forget_before(keep);
      net_->forget_before(t);
    }
    for (auto it = bundle_round_.begin(); it != bundle_round_.end();) {
      if (t > it->second + 6) {
        pads_.forget(it->first);
        legit_cache_.erase(it->first);
        roles_cache_.erase(it->first);
        it = bundle_round_.erase(it);
      } else {
        ++it;
      }
    }
  }

  res_.rounds = cfg_.rounds;
  for (std::size_t c = 0; c < kNumCategories; ++c) res_.consumed[c] = fabric_->consumed(static_cast<Category>(c));
  res_.link_counter_sum = fabric_->link_counter_sum();
  res_.consensus_bound = E * res_.k_max * cfg_.rounds;
  if (res_.link_counter_sum != fabric_->total_consumed()) res_.violations.push_back("link counters do not add up");

  // Safety: no two honest nodes commit different bundles in one view.
  for (const auto& v : res_.views) {
    std::set<std::string> digests;
    for (const auto& [node, d] : v.commits) digests.insert(d);
    if (digests.size() > 1) res_.violations.push_back("conflicting commits in view " + std::to_string(v.view));
  }
  for (const auto& k : res_.keys) {
    if (k.diverged()) res_.violations.push_back("end keys diverged for request " + std::to_string(k.req_id));
  }
  return std::move(res_);
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg) {
  Engine e(cfg);
  return e.run();
}

}  // namespace qkdnet::sim

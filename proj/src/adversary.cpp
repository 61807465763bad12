#include "qkdnet/adversary.hpp"

#include <array>
#include <bit>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "qkdnet/consensus.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/keydist.hpp"
#include "qkdnet/rng.hpp"

namespace qkdnet::adversary {

namespace {

constexpr std::uint64_t kGuessLabel = 0x47554553;  // "GUES"
constexpr std::uint64_t kFakeLabel = 0x46414b45;   // "FAKE"
constexpr std::uint64_t kFixLabel = 0x46495845;    // "FIXE"

double pow2_over_ln2(long e) { return std::ldexp(1.0, static_cast<int>(e)) / std::log(2.0); }

}  // namespace

SubstitutionBound bound_substitution(long m, long f, long k, long n, double eps_pa) {
  if (m <= 0 || n <= 0 || f < 0 || k <= 0) throw ParameterError("bound_substitution: lengths must be positive");
  if (!(eps_pa > 0.0)) throw ParameterError("bound_substitution: eps_pa must be positive");
  SubstitutionBound b;
  const long a = m + f * k - n;
  // log2(2^a + 2^m eps_pa), kept accurate when 2^m eps_pa is close to 1.
  const double c = std::log2(eps_pa) + static_cast<double>(m);
  b.general = c + std::log1p(std::exp2(static_cast<double>(a) - c)) / std::log(2.0);
  b.s = n - f * k - m;
  b.toeplitz = pow2_over_ln2(-b.s);
  return b;
}

double bound_nonrepudiation(long m, long f, long k, long n) {
  if (m <= 0 || n <= 0 || f < 0 || k <= 0) throw ParameterError("bound_nonrepudiation: lengths must be positive");
  return pow2_over_ln2(m + (f / 2) * k + k - n);
}

BoundReport bound_report(long m, long f, long k, long n, long C, double eps_pa, double eps_au) {
  if (C <= f) throw InfeasibleNetworkError("bound_report: C must exceed f");
  BoundReport r;
  r.i_ke_bound = bound_substitution(m, f, k, n, eps_pa).toeplitz;
  r.i_ab_bound = bound_nonrepudiation(m, f, k, n);
  r.k_min_imperson = static_cast<std::size_t>(std::ceil(-std::log2(eps_au) / static_cast<double>(C - f) - 1e-9));
  r.m = m;
  r.f = f;
  r.k = k;
  r.n = n;
  r.C = C;
  r.eps_pa = eps_pa;
  r.eps_au = eps_au;
  return r;
}

CoalitionView::CoalitionView(const KeyFabric& fabric, std::set<NodeId> members)
    : fabric_(fabric), members_(std::move(members)) {}

bool CoalitionView::knows(LinkId id) const {
  const QkdLink& l = fabric_.link(id);
  return members_.count(l.a) || members_.count(l.b);
}

BitString CoalitionView::link_bits(LinkId id, std::uint64_t offset, std::size_t len) {
  if (!knows(id)) {
    ++denied_;
    throw AccessViolation("coalition read of a link it does not touch");
  }
  ++reads_;
  return read_stream(fabric_.link(id), offset, len);
}

nlohmann::ordered_json AttackReport::to_json() const {
  nlohmann::ordered_json j;
  j["attack"] = attack;
  j["params"] = params;
  j["trials"] = trials;
  j["successes"] = successes;
  j["bound"] = bound;
  j["verdict"] = verdict ? "pass" : "fail";
  return j;
}

AttackReport attack_substitution(const SubstitutionParams& p) {
  if (p.C == 0 || p.k == 0 || p.f > p.C) throw ParameterError("attack_substitution: need 0 <= f <= C, C, k > 0");
  auth::AuthConfig cfg;
  cfg.hash.omega = p.omega;
  cfg.hash.tag_len = p.tag_len;
  cfg.hash.eps_hash = 0.01;
  cfg.kau_len = cfg.hash.key_length();
  cfg.validate();
  const std::size_t n = p.C * p.k;
  if (n < cfg.kau_len) throw ParameterError("attack_substitution: raw key shorter than the hash key");

  Graph g(p.C + 1);
  for (NodeId v = 1; v <= p.C; ++v) g.add_edge(0, v);
  KeyFabric fabric(g, p.seed);
  std::set<NodeId> coalition;
  for (NodeId v = 1; v <= p.f; ++v) coalition.insert(v);
  CoalitionView view(fabric, coalition);
  Rng guess(derive_seed(p.seed, {kGuessLabel}));
  const std::vector<std::size_t> blocks(fabric.num_links(), p.k);

  std::uint64_t wins = 0;
  for (std::uint64_t t = 0; t < p.trials; ++t) {
    fabric.open_round(t, blocks);
    const RawKey raw = build_raw_key(fabric, 0, t, p.k);
    const std::uint64_t round_seed = pa_round_seed(p.seed, 0, t);

    // Coalition side: the segment map is public, the bits come from the view.
    RawKey forged{0, t, {}, raw.segments};
    for (const auto& seg : raw.segments) {
      forged.bits.append(view.knows(seg.link) ? view.link_bits(seg.link, seg.offset, seg.len) : guess.bits(seg.len));
    }
    const AuthKey forged_key = derive_auth_key(forged, cfg.kau_len, round_seed);
    Bytes payload{'F', 'O', 'R', 'G'};
    for (int i = 0; i < 8; ++i) payload.push_back(static_cast<std::uint8_t>(t >> (8 * i)));
    const BitString tag = auth::make_tag(forged_key, payload, cfg);

    // Honest verifier side: the target's real disclosure.
    const AuthKey real = derive_auth_key(raw, cfg.kau_len, round_seed);
    const auth::Disclosure d = auth::make_disclosure(raw, real);
    const auto expected = pa_seed_for(round_seed, n, cfg.kau_len);
    wins += auth::verify_tuple(d, payload, tag, cfg, &expected);
    fabric.forget_before(t + 1);
  }

  AttackReport r;
  r.attack = "substitution";
  r.params = {{"f", p.f}, {"C", p.C}, {"k", p.k}, {"n", n}, {"omega", p.omega}, {"tag_len", p.tag_len},
              {"seed", p.seed}, {"coalition_reads", view.reads()}, {"denied_reads", view.denied()}};
  r.trials = p.trials;
  r.successes = wins;
  r.bound = std::ldexp(1.0, -static_cast<int>((p.C - p.f) * p.k));
  const double sigma = std::sqrt(r.bound * (1.0 - r.bound) / static_cast<double>(p.trials));
  const double rate = static_cast<double>(wins) / static_cast<double>(p.trials);
  r.params["rate"] = rate;
  r.params["sigma"] = sigma;
  r.verdict = rate <= r.bound + 3.0 * sigma && view.denied() == 0;
  return r;
}

Graph two_area_topology(bool bridge) {
  Graph g(10);
  for (NodeId base : {0u, 4u}) {
    for (NodeId u = base; u < base + 4; ++u)
      for (NodeId v = u + 1; v < base + 4; ++v) g.add_edge(u, v);
  }
  for (NodeId m : {8u, 9u})
    for (NodeId v = 0; v < 8; ++v) g.add_edge(m, v);
  if (bridge) g.add_edge(2, 6);
  return g;
}

FakeAreaResult attack_fake_area(const Graph& topology, const std::set<NodeId>& coalition,
                                const std::set<NodeId>& fake, NodeId observer, std::size_t f, std::size_t k,
                                std::uint64_t seed) {
  if (fake.count(observer) || coalition.count(observer)) throw ParameterError("attack_fake_area: observer must be honest");
  KeyFabric fabric(topology, seed);
  fabric.open_round(0, std::vector<std::size_t>(fabric.num_links(), k));
  const std::size_t N = topology.num_vertices();
  std::vector<auth::Disclosure> genuine;
  for (NodeId v = 0; v < N; ++v) {
    const RawKey raw = build_raw_key(fabric, v, 0, k);
    genuine.push_back(auth::Disclosure{v, 0, raw.bits, raw.segments, {}});
  }

  CoalitionView view(fabric, coalition);
  Rng rng(derive_seed(seed, {kFakeLabel}));
  std::map<LinkId, BitString> invented;  // links between two fake identities
  std::vector<auth::Disclosure> forged = genuine;
  for (NodeId v : fake) {
    auth::Disclosure& d = forged[v];
    d.raw_bits = BitString();
    for (const auto& seg : d.segments) {
      const NodeId other = fabric.link(seg.link).other(v);
      if (coalition.count(other)) {
        d.raw_bits.append(view.link_bits(seg.link, seg.offset, seg.len));
      } else if (fake.count(other)) {
        auto it = invented.find(seg.link);
        if (it == invented.end()) it = invented.emplace(seg.link, rng.bits(seg.len)).first;
        d.raw_bits.append(it->second);
      } else {
        d.raw_bits.append(rng.bits(seg.len));  // a real link to an honest node: guess
      }
    }
  }

  const auto ends = auth::link_ends(fabric);
  auto graph_of = [&](const std::vector<auth::Disclosure>& ds) {
    std::vector<const auth::Disclosure*> ptrs;
    for (const auto& d : ds) ptrs.push_back(&d);
    return auth::build_validation_graph(ptrs, N, ends);
  };
  const auto g1 = graph_of(genuine);
  const auto g2 = graph_of(forged);
  FakeAreaResult r;
  r.accepted = true;
  r.rejected = true;
  for (NodeId v : fake) {
    r.genuine_trust[v] = auth::trust_decision(g1, v, observer, f);
    r.fake_trust[v] = auth::trust_decision(g2, v, observer, f);
    r.accepted &= r.genuine_trust[v] == r.fake_trust[v];
    r.rejected &= r.genuine_trust[v] && !r.fake_trust[v];
  }
  return r;
}

EquivocationOutcome attack_equivocate(sim::SimConfig cfg) {
  cfg.behavior = sim::Behavior::equivocate;
  if (!cfg.coalition) cfg.coalition_has_first_leader = true;
  return summarize_equivocation(sim::run_simulation(cfg));
}

EquivocationOutcome summarize_equivocation(const sim::SimResult& res) {
  EquivocationOutcome out;
  const std::size_t honest = res.topology.N - res.coalition.size();
  for (const auto& v : res.views) {
    std::set<std::string> digests;
    for (const auto& [node, d] : v.commits) digests.insert(d);
    out.conflicting_views += digests.size() > 1;
    if (!v.equivocated) continue;
    out.honest_commits_in_equivocated += v.commits.size();
    if (v.start + consensus::Timing::view_change_timeout > res.rounds) {
      ++out.unsettled;
      continue;
    }
    ++out.equivocated_views;
    out.deposed_in_view += v.view_changed.size() == honest;
  }
  out.violations = res.violations;
  return out;
}

WrongKxOutcome attack_wrong_kx(sim::SimConfig cfg) {
  cfg.behavior = sim::Behavior::wrong_kx;
  const sim::SimResult res = sim::run_simulation(cfg);
  WrongKxOutcome out;
  for (const auto& k : res.keys) {
    if (!(k.src_done && k.dst_done)) continue;
    ++out.schemes;
    if (k.diverged()) {
      ++out.divergent;
    } else if (k.src_ok) {
      ++out.succeeded;
    } else {
      ++out.failed_safely;
    }
    for (NodeId b : k.blamed) {
      if (res.coalition.count(b)) {
        ++out.blamed_coalition;
        break;
      }
    }
  }
  out.violations = res.violations;
  return out;
}

FairnessResult leader_fairness(std::size_t N, std::size_t f, std::uint64_t views, std::uint64_t seed) {
  const simnet::Topology topo = simnet::gen_topology(N, f, seed);
  SecurityParams sec;
  sec.f = f;
  sec.C = topo.C;
  sec.validate(N);
  KeyFabric fabric(topo.graph, seed);
  std::vector<std::size_t> k(N);
  for (NodeId v = 0; v < N; ++v) k[v] = compute_k(sec, fabric.active_degree(v));
  std::vector<std::size_t> blocks(fabric.num_links());
  for (const auto& l : fabric.links()) blocks[l.id] = std::max(k[l.a], k[l.b]);

  // The coalition commits to its keys before the first view.
  Rng fix(derive_seed(seed, {kFixLabel}));
  std::map<NodeId, BitString> fixed;
  for (NodeId v = 0; v < f; ++v) fixed[v] = fix.bits(k[v] * fabric.active_degree(v));

  FairnessResult r;
  r.counts.assign(N, 0);
  for (std::uint64_t view = 0; view < views; ++view) {
    fabric.open_round(view, blocks);
    std::vector<BitString> keys;
    for (NodeId v = 0; v < N; ++v) {
      keys.push_back(fixed.count(v) ? fixed[v] : build_raw_key(fabric, v, view, k[v]).bits);
    }
    ++r.counts[consensus::elect_leader(keys, N)];
    fabric.forget_before(view + 1);
  }
  const double expect = static_cast<double>(views) / static_cast<double>(N);
  for (auto c : r.counts) r.chi2 += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
  r.threshold = boost::math::quantile(boost::math::chi_squared(static_cast<double>(N - 1)), 0.99);
  r.pass = r.chi2 < r.threshold;
  return r;
}

namespace {

// Variables are 4-bit nibbles: the secret, p-1 free shares, then one pad per hop.
struct SecrecyLayout {
  std::vector<Path> paths;
  std::size_t p = 0;
  std::vector<std::size_t> first_pad;  // per path, index of its first hop pad
  std::size_t vars = 0;
  std::size_t relays = 0;
  bool syndromes = false;
  std::size_t pub_bits = 0;

  explicit SecrecyLayout(const std::vector<Path>& ps, bool syn) : paths(ps), p(ps.size()), syndromes(syn) {
    vars = p;  // S and R_1..R_{p-1}
    for (const auto& path : paths) {
      if (path.size() < 2) throw ParameterError("secrecy: path too short");
      first_pad.push_back(vars);
      vars += path.size() - 1;
      relays += path.size() - 2;
    }
    pub_bits = 4 * (relays + p) + (syn ? p : 0);
  }
};

constexpr unsigned kSyndSeed = 0b1011;  // public 1-bit Toeplitz row over a 4-bit share

// Public broadcast of one configuration: every KX, then every ciphertext,
// then (optionally) one checksum bit per share.
std::uint64_t public_view(const SecrecyLayout& L, const std::uint8_t* x) {
  std::uint64_t out = 0;
  unsigned pos = 0;
  auto put = [&](unsigned v, unsigned bits) {
    out |= static_cast<std::uint64_t>(v) << pos;
    pos += bits;
  };
  std::uint8_t last_share = x[0];
  for (std::size_t i = 1; i < L.p; ++i) last_share ^= x[i];
  for (std::size_t i = 0; i < L.p; ++i) {
    const std::uint8_t* pad = x + L.first_pad[i];
    for (std::size_t h = 1; h + 1 < L.paths[i].size(); ++h) put(pad[h - 1] ^ pad[h], 4);
  }
  for (std::size_t i = 0; i < L.p; ++i) {
    const std::uint8_t share = i + 1 < L.p ? x[i + 1] : last_share;
    const std::uint8_t* pad = x + L.first_pad[i];
    put(share ^ pad[L.paths[i].size() - 2], 4);
  }
  if (L.syndromes) {
    for (std::size_t i = 0; i < L.p; ++i) {
      const std::uint8_t share = i + 1 < L.p ? x[i + 1] : last_share;
      put(std::popcount(static_cast<unsigned>(share & kSyndSeed)) & 1, 1);
    }
  }
  return out;
}

}  // namespace

bool secrecy_crosscheck(const std::vector<Path>& paths, std::size_t samples, std::uint64_t seed) {
  const SecrecyLayout L(paths, true);
  Rng rng(seed);
  for (std::size_t t = 0; t < samples; ++t) {
    std::vector<std::uint8_t> x(L.vars);
    for (auto& v : x) v = static_cast<std::uint8_t>(rng.below(16));
    const std::uint64_t fast = public_view(L, x.data());

    // Same observation through the library's share, KX and checksum code.
    std::vector<BitString> shares;
    BitString last = BitString::from_uint(x[0], 4);
    for (std::size_t i = 1; i < L.p; ++i) {
      shares.push_back(BitString::from_uint(x[i], 4));
      last ^= shares.back();
    }
    shares.push_back(last);
    std::uint64_t slow = 0;
    unsigned pos = 0;
    auto put = [&](std::uint64_t v, unsigned bits) {
      slow |= v << pos;
      pos += bits;
    };
    std::vector<std::vector<BitString>> kx(L.p);
    for (std::size_t i = 0; i < L.p; ++i) {
      const std::uint8_t* pad = x.data() + L.first_pad[i];
      for (std::size_t h = 1; h + 1 < paths[i].size(); ++h) {
        kx[i].push_back(keydist::relay_kx(paths[i][h], static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(h),
                                          BitString::from_uint(pad[h - 1], 4), BitString::from_uint(pad[h], 4))
                            .bits);
        put(kx[i].back().read_uint(0, 4), 4);
      }
    }
    for (std::size_t i = 0; i < L.p; ++i) {
      const std::uint8_t* pad = x.data() + L.first_pad[i];
      const BitString c = keydist::source_combine(shares[i], BitString::from_uint(pad[0], 4), kx[i]);
      if (!(keydist::unwrap_share(c, BitString::from_uint(pad[paths[i].size() - 2], 4)) == shares[i])) return false;
      put(c.read_uint(0, 4), 4);
    }
    for (std::size_t i = 0; i < L.p; ++i) {
      // Toeplitz seed of n + m - 1 = 4 bits; row 0 reads seed[3 - j] against share bit j.
      const BitString seed_bits = BitString::from_uint(kSyndSeed, 4).reversed();
      put(crypto::make_syndrome(shares[i], seed_bits, 1).value.get(0), 1);
    }
    if (slow != fast) return false;
  }
  return true;
}

SecrecyResult secrecy_enumeration(const std::vector<Path>& paths, const std::set<NodeId>& coalition,
                                  bool with_syndromes) {
  const SecrecyLayout L(paths, with_syndromes);
  if (4 * L.vars > 32) throw ParameterError("secrecy: too many variables to enumerate");
  if (L.pub_bits + 4 > 26) throw ParameterError("secrecy: public view too wide");

  // Pads on links touching the coalition are observed directly (outer loop);
  // everything else, the secret included, is enumerated inside.
  std::vector<std::size_t> outer, inner{0};
  for (std::size_t i = 1; i < L.p; ++i) inner.push_back(i);
  for (std::size_t i = 0; i < L.p; ++i) {
    for (std::size_t h = 0; h + 1 < paths[i].size(); ++h) {
      const bool seen = coalition.count(paths[i][h]) || coalition.count(paths[i][h + 1]);
      (seen ? outer : inner).push_back(L.first_pad[i] + h);
    }
  }
  const std::uint64_t n_outer = std::uint64_t{1} << (4 * outer.size());
  const std::uint64_t n_inner = std::uint64_t{1} << (4 * inner.size());

  std::vector<std::uint32_t> joint(std::size_t{1} << (L.pub_bits + 4), 0);
  std::vector<std::uint32_t> marginal(std::size_t{1} << L.pub_bits, 0);
  std::vector<std::uint32_t> touched;
  touched.reserve(n_inner);

  SecrecyResult res;
  res.paths = paths;
  res.coalition = coalition;
  res.configs = n_outer * n_inner;
  res.independent = true;
  double mi = 0;
  std::vector<std::uint8_t> x(L.vars, 0);
  for (std::uint64_t a = 0; a < n_outer; ++a) {
    for (std::size_t j = 0; j < outer.size(); ++j) x[outer[j]] = static_cast<std::uint8_t>((a >> (4 * j)) & 15);
    for (std::uint64_t b = 0; b < n_inner; ++b) {
      for (std::size_t j = 0; j < inner.size(); ++j) x[inner[j]] = static_cast<std::uint8_t>((b >> (4 * j)) & 15);
      const std::uint64_t pub = public_view(L, x.data());
      const std::uint32_t idx = static_cast<std::uint32_t>((pub << 4) | x[0]);
      if (joint[idx]++ == 0) touched.push_back(idx);
      ++marginal[pub];
    }
    // I(S; pub | outer = a), with S uniform over the inner enumeration.
    double part = 0;
    for (std::uint32_t idx : touched) {
      const double c = joint[idx];
      const double m = marginal[idx >> 4];
      if (16.0 * c != m) res.independent = false;
      part += c / static_cast<double>(n_inner) * std::log2(16.0 * c / m);
    }
    mi += part / static_cast<double>(n_outer);
    for (std::uint32_t idx : touched) {
      joint[idx] = 0;
      marginal[idx >> 4] = 0;
    }
    touched.clear();
  }
  res.mi_bits = mi;
  return res;
}

}  // namespace qkdnet::adversary

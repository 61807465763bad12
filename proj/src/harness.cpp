#include "qkdnet/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "qkdnet/errors.hpp"

namespace qkdnet::harness {

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sigma_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"N",         "f",          "lambda",          "delta",
                                           "seeds",     "rounds",     "topology_sampler", "radius",
                                           "edge_prob", "tag_len",    "share_len",       "include_payload",
                                           "behavior",  "scheme"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");
  }
  ExperimentConfig c;
  c.N = get_or<std::size_t>(j, "N", c.N);
  c.f = get_or<std::size_t>(j, "f", c.f);
  c.lambda = get_or<double>(j, "lambda", c.lambda);
  c.delta = get_or<double>(j, "delta", c.delta);
  c.rounds = get_or<std::uint64_t>(j, "rounds", c.rounds);
  c.tag_len = get_or<std::size_t>(j, "tag_len", c.tag_len);
  c.share_len = get_or<std::size_t>(j, "share_len", c.share_len);
  c.include_payload = get_or<bool>(j, "include_payload", c.include_payload);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_number_unsigned()) {
      // A count: seeds 1..n.
      c.seeds.clear();
      for (std::uint64_t i = 1; i <= s.get<std::uint64_t>(); ++i) c.seeds.push_back(i);
    } else {
      c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
    }
  }
  c.sampler.kind = get_or<std::string>(j, "topology_sampler", c.sampler.kind);
  c.sampler.radius = get_or<double>(j, "radius", c.sampler.radius);
  c.sampler.edge_prob = get_or<double>(j, "edge_prob", c.sampler.edge_prob);
  try {
    c.behavior = sim::parse_behavior(get_or<std::string>(j, "behavior", "honest"));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.scheme = get_or<std::string>(j, "scheme", c.scheme);
  if (c.scheme != "both" && c.scheme != "proposed" && c.scheme != "preshared")
    throw ConfigError("scheme must be proposed, preshared or both");

  if (c.N < 2) throw ConfigError("N must be at least 2");
  if (!(c.lambda >= 0.0) || !(c.delta > 0.0)) throw ConfigError("lambda must be >= 0 and delta > 0");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.rounds == 0) throw ConfigError("rounds must be positive");
  if (c.tag_len == 0) throw ConfigError("tag_len must be positive");
  if (c.sampler.kind != "geometric" && c.sampler.kind != "erdos_renyi")
    throw ConfigError("unknown topology_sampler '" + c.sampler.kind + "'");
  if (2 * c.f + 1 > c.N) throw ConfigError("f must satisfy 2f + 1 <= N");
  return c;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  return {{"N", N},
          {"f", f},
          {"lambda", lambda},
          {"delta", delta},
          {"seeds", seeds},
          {"rounds", rounds},
          {"topology_sampler", sampler.kind},
          {"radius", sampler.radius},
          {"edge_prob", sampler.edge_prob},
          {"tag_len", tag_len},
          {"share_len", share_len},
          {"include_payload", include_payload},
          {"behavior", sim::behavior_name(behavior)},
          {"scheme", scheme}};
}

sim::SimConfig ExperimentConfig::sim_config(std::uint64_t seed) const {
  sim::SimConfig s;
  s.N = N;
  s.f = f;
  s.lambda = lambda;
  s.seed = seed;
  s.rounds = rounds;
  s.arrival_rounds = 0;
  s.sampler = sampler;
  s.share_len = share_len;
  s.behavior = behavior;
  s.log_level = EventLog::Level::off;
  return s;
}

std::uint64_t baseline_cost(const Graph& topology, const std::vector<PairWindow>& requests, std::size_t f,
                            std::size_t tag_len) {
  std::set<std::tuple<std::uint64_t, NodeId, NodeId>> seen;
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> hops;  // summed path lengths per pair
  std::uint64_t total = 0;
  for (const auto& r : requests) {
    if (r.src == r.dst || topology.has_edge(r.src, r.dst)) continue;
    if (!seen.emplace(r.window, r.src, r.dst).second) continue;  // one tag per pair per window
    auto it = hops.find({r.src, r.dst});
    if (it == hops.end()) {
      const auto paths = shortest_disjoint_paths(topology, r.src, r.dst, f + 1);
      if (!paths) throw InfeasibleNetworkError("baseline: fewer than f+1 disjoint paths");
      std::uint64_t len = 0;
      for (const auto& p : *paths) len += p.size() - 1;
      it = hops.emplace(std::make_pair(r.src, r.dst), len).first;
    }
    total += tag_len * it->second;
  }
  return total;
}

std::vector<PairWindow> request_windows(const sim::SimConfig& cfg, std::size_t N) {
  std::vector<PairWindow> out;
  if (!(cfg.lambda > 0.0)) return out;
  const simnet::RequestStream stream{cfg.lambda, cfg.seed};
  const std::uint64_t end = cfg.arrival_rounds == 0 ? cfg.rounds : cfg.arrival_rounds;
  for (std::uint64_t t = 0; t < end; ++t) {
    for (NodeId s = 0; s < N; ++s) {
      for (NodeId d = 0; d < N; ++d) {
        if (s != d && simnet::poisson_arrivals(stream, {s, d}, t) > 0) out.push_back({s, d, t});
      }
    }
  }
  return out;
}

std::uint64_t consensus_cost_bound(std::uint64_t edges, std::uint64_t k_max, std::uint64_t steps) {
  return edges * k_max * steps;
}

std::uint64_t consensus_cost_bound(const Graph& topology, std::uint64_t k_max, std::uint64_t steps) {
  return consensus_cost_bound(topology.num_edges(), k_max, steps);
}

RunRecord run_one(const ExperimentConfig& cfg, std::uint64_t seed) {
  const sim::SimConfig sc = cfg.sim_config(seed);
  const sim::SimResult res = sim::run_simulation(sc);
  RunRecord r;
  r.seed = seed;
  r.proposed = res.consumed;
  r.link_counter_sum = res.link_counter_sum;
  r.consensus_bound = consensus_cost_bound(res.topology.graph, res.k_max, res.rounds);
  r.bound_held = res.bound_held;
  r.requests = res.requests;
  r.edges = res.topology.graph.num_edges();
  r.C = res.topology.C;
  r.violations = res.violations;
  for (const auto& k : res.keys) {
    if (!(k.src_done && k.dst_done)) continue;
    (k.src_ok && k.dst_ok ? r.keys_ok : r.keys_failed)++;
  }
  r.baseline = baseline_cost(res.topology.graph, request_windows(sc, cfg.N), cfg.f, cfg.tag_len);
  std::uint64_t sum = 0;
  for (auto c : r.proposed) sum += c;
  if (sum != r.link_counter_sum) r.violations.push_back("accounting: category totals differ from link counters");
  if (r.consensus_bound != res.consensus_bound) r.violations.push_back("accounting: consensus bound mismatch");
  const auto consensus = r.proposed[static_cast<std::size_t>(Category::consensus)];
  if (consensus > r.consensus_bound) r.violations.push_back("consensus consumption exceeds E*k_max*steps");
  return r;
}

unsigned default_workers() {
  if (const char* env = std::getenv("QKDNET_WORKERS")) {
    const long w = std::strtol(env, nullptr, 10);
    if (w > 0) return static_cast<unsigned>(w);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

nlohmann::ordered_json ConsumptionReport::to_json() const {
  nlohmann::ordered_json j;
  j["scheme"] = scheme;
  j["N"] = N;
  j["f"] = f;
  j["lambda"] = lambda;
  j["runs"] = runs;
  j["total_bits"] = total_bits;
  for (std::size_t c = 0; c < kNumCategories; ++c)
    j["per_category"][category_name(static_cast<Category>(c))] = per_category[c];
  j["mean"] = mean;
  j["sigma"] = sigma;
  return j;
}

nlohmann::ordered_json RunRecord::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  for (std::size_t c = 0; c < kNumCategories; ++c) j["proposed"][category_name(static_cast<Category>(c))] = proposed[c];
  j["link_counter_sum"] = link_counter_sum;
  j["baseline"] = baseline;
  j["consensus_bound"] = consensus_bound;
  j["bound_held"] = bound_held;
  j["requests"] = requests;
  j["keys_ok"] = keys_ok;
  j["keys_failed"] = keys_failed;
  j["edges"] = edges;
  j["C"] = C;
  j["violations"] = violations;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    for (std::size_t c = 0; c < kNumCategories; ++c)
      r.proposed[c] = j.at("proposed").at(category_name(static_cast<Category>(c))).get<std::uint64_t>();
    r.link_counter_sum = j.at("link_counter_sum").get<std::uint64_t>();
    r.baseline = j.at("baseline").get<std::uint64_t>();
    r.consensus_bound = j.at("consensus_bound").get<std::uint64_t>();
    r.bound_held = j.at("bound_held").get<bool>();
    r.requests = j.at("requests").get<std::uint64_t>();
    r.keys_ok = j.at("keys_ok").get<std::uint64_t>();
    r.keys_failed = j.at("keys_failed").get<std::uint64_t>();
    r.edges = j.at("edges").get<std::size_t>();
    r.C = j.at("C").get<std::size_t>();
    r.violations = j.at("violations").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run record: ") + e.what());
  }
  return r;
}

bool ExperimentResult::ok() const {
  for (const auto& r : records) {
    if (!r.violations.empty() || !r.bound_held) return false;
  }
  return true;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers) {
  if (workers == 0) workers = default_workers();
  ExperimentResult out;
  out.config = cfg;
  out.records.resize(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfg.seeds.size();) {
      try {
        out.records[i] = run_one(cfg, cfg.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < std::min<std::size_t>(workers, cfg.seeds.size()); ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return aggregate(cfg, std::move(out.records));
}

ExperimentResult aggregate(const ExperimentConfig& cfg, std::vector<RunRecord> records) {
  ExperimentResult out;
  out.config = cfg;
  out.records = std::move(records);

  const auto auth = static_cast<std::size_t>(Category::auth);
  const auto keydist = static_cast<std::size_t>(Category::keydist);
  const auto consensus = static_cast<std::size_t>(Category::consensus);
  auto init = [&](ConsumptionReport& r, const char* scheme) {
    r.scheme = scheme;
    r.N = cfg.N;
    r.f = cfg.f;
    r.lambda = cfg.lambda;
    for (const auto& rec : out.records) r.runs.push_back(rec.seed);
  };
  init(out.proposed, "proposed");
  init(out.preshared, "preshared");
  std::vector<double> prop, pre;
  std::array<std::vector<double>, kNumCategories> prop_cat, pre_cat;
  for (const auto& r : out.records) {
    const std::uint64_t payload = cfg.include_payload ? r.proposed[keydist] : 0;
    const std::uint64_t p = r.proposed[auth] + r.proposed[consensus] + payload;
    const std::uint64_t b = r.baseline + payload;
    out.proposed.total_bits.push_back(p);
    out.preshared.total_bits.push_back(b);
    prop.push_back(static_cast<double>(p));
    pre.push_back(static_cast<double>(b));
    for (std::size_t c = 0; c < kNumCategories; ++c) {
      prop_cat[c].push_back(c == keydist ? static_cast<double>(payload) : static_cast<double>(r.proposed[c]));
    }
    pre_cat[auth].push_back(static_cast<double>(r.baseline));
    pre_cat[keydist].push_back(static_cast<double>(payload));
    pre_cat[consensus].push_back(0.0);
  }
  out.proposed.mean = mean_of(prop);
  out.proposed.sigma = sigma_of(prop);
  out.preshared.mean = mean_of(pre);
  out.preshared.sigma = sigma_of(pre);
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    out.proposed.per_category[c] = mean_of(prop_cat[c]);
    out.preshared.per_category[c] = mean_of(pre_cat[c]);
  }
  return out;
}

void emit_report(const std::vector<ExperimentResult>& results, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    out << "N,f,lambda,scheme,runs,mean_bits,sigma_bits,auth_bits,keydist_bits,consensus_bits,ratio\n";
    for (const auto& r : results) {
      for (const ConsumptionReport* c : {&r.proposed, &r.preshared}) {
        if (r.config.scheme != "both" && r.config.scheme != c->scheme) continue;
        out << c->N << ',' << c->f << ',' << c->lambda << ',' << c->scheme << ',' << c->runs.size() << ','
            << c->mean << ',' << c->sigma << ',' << c->per_category[0] << ',' << c->per_category[1] << ','
            << c->per_category[2] << ',' << (c == &r.proposed ? r.ratio() : 1.0) << '\n';
      }
    }
  } else if (format == "jsonl") {
    for (const auto& r : results) {
      for (const ConsumptionReport* c : {&r.proposed, &r.preshared}) {
        if (r.config.scheme != "both" && r.config.scheme != c->scheme) continue;
        auto j = c->to_json();
        j["ratio"] = c == &r.proposed ? r.ratio() : 1.0;
        out << j.dump() << '\n';
      }
    }
  } else {
    throw ConfigError("unknown report format '" + format + "'");
  }
}

void emit_report(const std::vector<ExperimentResult>& results, const std::string& format,
                 const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  emit_report(results, format, f);
}

}  // namespace qkdnet::harness

// qkdnet: run experiments, attacks and bound calculations from the shell.
//
//   qkdnet simulate --config grid.json --out results/
//   qkdnet report --in results/ --format csv
//   qkdnet attack --name substitution --trials 100000
//   qkdnet bounds --params m=256 f=1 k=96 n=416 C=3
//
// Exit codes: 0 ok, 1 usage or config error, 2 invariant violation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qkdnet/adversary.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/harness.hpp"

namespace fs = std::filesystem;
using namespace qkdnet;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kViolation = 2;

std::vector<harness::ExperimentConfig> load_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  std::vector<harness::ExperimentConfig> out;
  if (j.is_array()) {
    for (const auto& c : j) out.push_back(harness::ExperimentConfig::from_json(c));
  } else {
    out.push_back(harness::ExperimentConfig::from_json(j));
  }
  return out;
}

int cmd_simulate(const std::string& config, const std::string& out_dir) {
  const auto configs = load_configs(config);
  fs::create_directories(out_dir);
  std::vector<harness::ExperimentResult> results;
  std::ofstream runs(fs::path(out_dir) / "runs.jsonl");
  bool ok = true;
  for (const auto& c : configs) {
    std::cerr << "N=" << c.N << " f=" << c.f << " lambda=" << c.lambda << " seeds=" << c.seeds.size() << "\n";
    results.push_back(harness::run_experiment(c));
    const auto& r = results.back();
    for (const auto& rec : r.records) {
      ordered_json line = rec.to_json();
      line["config"] = c.to_json();
      runs << line.dump() << '\n';
      for (const auto& v : rec.violations) std::cerr << "violation (seed " << rec.seed << "): " << v << "\n";
    }
    ok &= r.ok();
    std::cerr << "  ratio " << r.ratio() << "\n";
  }
  harness::emit_report(results, "csv", (fs::path(out_dir) / "report.csv").string());
  harness::emit_report(results, "jsonl", (fs::path(out_dir) / "report.jsonl").string());
  return ok ? 0 : kViolation;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  std::ifstream in(fs::path(in_dir) / "runs.jsonl");
  if (!in) throw ConfigError("no runs.jsonl in " + in_dir);
  // Group run records back into their experiments, keeping first-seen order.
  std::vector<std::pair<std::string, harness::ExperimentConfig>> order;
  std::map<std::string, std::vector<harness::RunRecord>> groups;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string key = j.at("config").dump();
    if (!groups.count(key)) order.emplace_back(key, harness::ExperimentConfig::from_json(j.at("config")));
    groups[key].push_back(harness::RunRecord::from_json(j));
  }
  std::vector<harness::ExperimentResult> results;
  bool ok = true;
  for (const auto& [key, cfg] : order) {
    results.push_back(harness::aggregate(cfg, groups[key]));
    ok &= results.back().ok();
  }
  harness::emit_report(results, format, std::cout);
  return ok ? 0 : kViolation;
}

int cmd_attack(const std::string& name, std::uint64_t trials, std::uint64_t seed) {
  ordered_json out;
  bool pass = false;
  if (name == "substitution") {
    bool all = true;
    out = ordered_json::array();
    for (auto [f, C, k] : {std::tuple{3, 4, 8}, std::tuple{6, 8, 4}}) {
      adversary::SubstitutionParams p;
      p.f = f;
      p.C = C;
      p.k = k;
      p.trials = trials;
      p.seed = seed;
      const auto r = adversary::attack_substitution(p);
      all &= r.verdict;
      out.push_back(r.to_json());
    }
    pass = all;
  } else if (name == "fake_area") {
    const std::set<NodeId> coalition{8, 9}, fake{4, 5, 6, 7};
    const auto with = adversary::attack_fake_area(adversary::two_area_topology(true), coalition, fake, 3, 2, 64, seed);
    const auto without =
        adversary::attack_fake_area(adversary::two_area_topology(false), coalition, fake, 3, 2, 64, seed);
    out = {{"attack", "fake_area"},
           {"with_bridge", {{"rejected", with.rejected}, {"accepted", with.accepted}}},
           {"without_bridge", {{"rejected", without.rejected}, {"accepted", without.accepted}}}};
    pass = with.rejected && without.accepted;
  } else if (name == "equivocate" || name == "wrong_kx") {
    std::uint64_t bad = 0, episodes = 0;
    out = {{"attack", name}, {"runs", trials}};
    for (std::uint64_t t = 0; t < trials; ++t) {
      sim::SimConfig c;
      c.N = 7;
      c.f = 2;
      c.seed = seed + t;
      c.lambda = 0.3;
      c.rounds = 24;
      c.log_level = EventLog::Level::off;
      if (name == "equivocate") {
        const auto e = adversary::attack_equivocate(c);
        episodes += e.equivocated_views;
        bad += !e.violations.empty() || e.conflicting_views > 0 || e.deposed_in_view != e.equivocated_views ||
               e.equivocated_views == 0;
      } else {
        const auto w = adversary::attack_wrong_kx(c);
        episodes += w.failed_safely;
        bad += !w.violations.empty() || w.divergent > 0;
      }
    }
    out["events"] = episodes;
    out["bad_runs"] = bad;
    pass = bad == 0;
  } else if (name == "fairness") {
    const auto r = adversary::leader_fairness(10, 3, trials, seed);
    out = {{"attack", "fairness"}, {"views", trials}, {"counts", r.counts}, {"chi2", r.chi2}, {"threshold", r.threshold}};
    pass = r.pass;
  } else if (name == "secrecy") {
    const auto r = adversary::secrecy_enumeration({{0, 1, 4}, {0, 2, 3, 4}}, {1});
    out = {{"attack", "secrecy"}, {"configs", r.configs}, {"mi_bits", r.mi_bits}, {"independent", r.independent}};
    pass = r.independent;
  } else {
    throw ConfigError("unknown attack '" + name + "' (substitution, fake_area, equivocate, wrong_kx, fairness, secrecy)");
  }
  std::cout << out.dump(2) << '\n';
  return pass ? 0 : kViolation;
}

int cmd_bounds(const std::vector<std::string>& params) {
  std::map<std::string, double> p{{"m", 256}, {"f", 1},        {"k", 96},
                                  {"n", 416}, {"C", 3},        {"eps_pa", -1},
                                  {"eps_au", 2e-12}};
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || !p.count(kv.substr(0, eq))) throw ConfigError("bad parameter '" + kv + "'");
    try {
      p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad value in '" + kv + "'");
    }
  }
  auto L = [&](const char* k) { return static_cast<long>(p[k]); };
  if (p["eps_pa"] < 0) p["eps_pa"] = std::ldexp(1.0, -static_cast<int>(L("m")));  // Toeplitz PA
  const auto r = adversary::bound_report(L("m"), L("f"), L("k"), L("n"), L("C"), p["eps_pa"], p["eps_au"]);
  const auto sub = adversary::bound_substitution(L("m"), L("f"), L("k"), L("n"), p["eps_pa"]);
  ordered_json out{{"m", r.m},           {"f", r.f},
                   {"k", r.k},           {"n", r.n},
                   {"C", r.C},           {"s", sub.s},
                   {"eps_pa", r.eps_pa}, {"eps_au", r.eps_au},
                   {"I_ke_bound", r.i_ke_bound},
                   {"I_ke_general", sub.general},
                   {"I_ab_bound", r.i_ab_bound},
                   {"k_min_impersonation", r.k_min_imperson}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QKD network protocol simulator"};
  app.require_subcommand(1);

  std::string config, out_dir = "results", in_dir = "results", format = "csv", attack;
  std::uint64_t trials = 100000, seed = 1;
  std::vector<std::string> params;

  auto* sim = app.add_subcommand("simulate", "run an experiment grid; writes runs.jsonl, report.csv, report.jsonl");
  sim->add_option("--config", config, "JSON object or array of objects")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "output directory");

  auto* rep = app.add_subcommand("report", "re-aggregate a results directory");
  rep->add_option("--in", in_dir, "directory written by simulate");
  rep->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* att = app.add_subcommand("attack", "run an adversary experiment");
  att->add_option("--name", attack, "substitution, fake_area, equivocate, wrong_kx, fairness, secrecy")->required();
  att->add_option("--trials", trials, "trials, runs or views depending on the attack");
  att->add_option("--seed", seed, "master seed");

  auto* bnd = app.add_subcommand("bounds", "evaluate the closed-form security bounds");
  bnd->add_option("--params", params, "key=value among m f k n C eps_pa eps_au");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(config, out_dir);
    if (*rep) return cmd_report(in_dir, format);
    if (*att) return cmd_attack(attack, trials, seed);
    if (*bnd) return cmd_bounds(params);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

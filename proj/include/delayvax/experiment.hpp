#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/galton_watson.hpp"
#include "delayvax/io.hpp"
#include "delayvax/parallel.hpp"
#include "delayvax/planner.hpp"
#include "delayvax/random.hpp"
#include "delayvax/sim.hpp"

namespace delayvax {

// Sweep definition. The grid is sizes x k_values x e_tau_values; every point
// generates trees_per_point trees and scores every policy on each with
// runs_per_tree simulated epidemics under exponential vaccination delay.
struct ExperimentConfig {
  std::string family_name = "binary";
  double family_mean = 0.0;  // poisson / uniform only
  std::vector<int> sizes{1000};
  std::vector<int> k_values{5};
  std::vector<double> e_tau_values{10.0};
  double lambda = 1.0;
  int trees_per_point = 10;
  int runs_per_tree = 1000;
  std::vector<PolicyKind> policies{PolicyKind::greedy(), PolicyKind::top_k_descendants(),
                                   PolicyKind::top_k_nns(), PolicyKind::top_k_frontiers()};
  std::uint64_t master_seed = 1;
  std::string output_dir = "results";
  bool emit_raw = false;

  OffspringDistribution offspring() const {
    if (family_name == "binary") return OffspringDistribution::binary_mix();
    if (family_name == "poisson") return OffspringDistribution::poisson(family_mean);
    if (family_name == "uniform")
      return OffspringDistribution::discrete_uniform(static_cast<int>(family_mean));
    fail(Errc::config_invalid, "unknown family `" + family_name + "`");
  }
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    std::size_t c = v.find(',');
    std::string_view item = v.substr(0, c);
    std::size_t a = item.find_first_not_of(" \t");
    if (a == std::string_view::npos)
      fail(Errc::config_invalid, "empty element in list value");
    out.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
    if (c == std::string_view::npos) break;
    v.remove_prefix(c + 1);
  }
  return out;
}

template <typename T>
inline T parse_number(std::string_view v, const char* what) {
  T value{};
  auto r = std::from_chars(v.data(), v.data() + v.size(), value);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    fail(Errc::config_invalid, std::string("cannot parse ") + what + " from `" + std::string(v) + "`");
  return value;
}

}  // namespace detail

// Flat `key = value` text; `#` starts a comment, lists are comma separated.
// Unknown and duplicated keys are rejected.
inline ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) continue;
    line = line.substr(a, line.find_last_not_of(" \t\r") - a + 1);
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::config_invalid, "expected key = value, got `" + std::string(line) + "`");
    auto trim = [](std::string_view s) {
      std::size_t b = s.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string_view{};
      return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    std::string key(trim(line.substr(0, eq)));
    std::string val(trim(line.substr(eq + 1)));
    if (key.empty() || val.empty())
      fail(Errc::config_invalid, "expected key = value, got `" + std::string(line) + "`");
    if (!kv.emplace(key, val).second) fail(Errc::config_invalid, "duplicate key `" + key + "`");
  }

  bool mean_given = false;
  int frontier_layers = -1;
  for (const auto& [key, val] : kv) {
    if (key == "family") {
      cfg.family_name = val;
    } else if (key == "family_mean") {
      cfg.family_mean = detail::parse_number<double>(val, "family_mean");
      mean_given = true;
    } else if (key == "sizes") {
      cfg.sizes.clear();
      for (auto v : detail::split_csv(val))
        cfg.sizes.push_back(detail::parse_number<int>(v, "sizes"));
    } else if (key == "k_values") {
      cfg.k_values.clear();
      for (auto v : detail::split_csv(val))
        cfg.k_values.push_back(detail::parse_number<int>(v, "k_values"));
    } else if (key == "e_tau_values") {
      cfg.e_tau_values.clear();
      for (auto v : detail::split_csv(val))
        cfg.e_tau_values.push_back(detail::parse_number<double>(v, "e_tau_values"));
    } else if (key == "lambda") {
      cfg.lambda = detail::parse_number<double>(val, "lambda");
    } else if (key == "trees_per_point") {
      cfg.trees_per_point = detail::parse_number<int>(val, "trees_per_point");
    } else if (key == "runs_per_tree") {
      cfg.runs_per_tree = detail::parse_number<int>(val, "runs_per_tree");
    } else if (key == "policies") {
      cfg.policies.clear();
      for (auto v : detail::split_csv(val)) cfg.policies.push_back(PolicyKind::parse(std::string(v)));
    } else if (key == "master_seed") {
      cfg.master_seed = detail::parse_number<std::uint64_t>(val, "master_seed");
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else if (key == "emit_raw") {
      if (val == "true" || val == "1")
        cfg.emit_raw = true;
      else if (val == "false" || val == "0")
        cfg.emit_raw = false;
      else
        fail(Errc::config_invalid, "emit_raw must be true|false");
    } else if (key == "frontier_layers") {
      frontier_layers = detail::parse_number<int>(val, "frontier_layers");
      if (frontier_layers < 0) fail(Errc::config_invalid, "frontier_layers must be >= 0");
    } else {
      fail(Errc::config_invalid, "unknown key `" + key + "`");
    }
  }

  if (cfg.family_name == "binary") {
    if (mean_given) fail(Errc::config_invalid, "the binary family takes no family_mean");
  } else if (cfg.family_name == "poisson" || cfg.family_name == "uniform") {
    if (!mean_given) fail(Errc::config_invalid, cfg.family_name + " family requires family_mean");
  } else {
    fail(Errc::config_invalid, "unknown family `" + cfg.family_name + "`");
  }
  try {
    cfg.offspring();  // validates the mean
  } catch (const std::invalid_argument& e) {
    fail(Errc::config_invalid, e.what());
  }
  if (cfg.sizes.empty() || cfg.k_values.empty() || cfg.e_tau_values.empty() ||
      cfg.policies.empty())
    fail(Errc::config_invalid, "sizes, k_values, e_tau_values and policies must be non-empty");
  for (int n : cfg.sizes)
    if (n < 2) fail(Errc::config_invalid, "sizes entries must be >= 2");
  for (int k : cfg.k_values)
    if (k < 1) fail(Errc::config_invalid, "k_values entries must be >= 1");
  for (double e : cfg.e_tau_values)
    if (!(e > 0.0)) fail(Errc::config_invalid, "e_tau_values entries must be > 0");
  if (!(cfg.lambda > 0.0)) fail(Errc::config_invalid, "lambda must be > 0");
  if (cfg.trees_per_point < 1 || cfg.runs_per_tree < 1)
    fail(Errc::config_invalid, "trees_per_point and runs_per_tree must be >= 1");
  if (frontier_layers >= 0)
    for (auto& p : cfg.policies)
      if (p.id == PolicyKind::Id::top_k_frontiers) p.threshold_layers = frontier_layers;
  return cfg;
}

struct ResultRow {
  std::string family;
  int n = 0;
  int k = 0;
  double e_tau = 0.0;
  std::string policy;
  std::uint64_t tree_seed = 0;
  double mean_saved_fraction = 0.0;
  double std_error = 0.0;
  double mean_never_infected_fraction = 0.0;
  double never_infected_std_error = 0.0;
};

struct RawRow {
  std::string family;
  int n = 0;
  int k = 0;
  double e_tau = 0.0;
  std::string policy;
  std::uint64_t tree_seed = 0;
  RunRecord rec;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<RawRow> raw;
};

// Runs the sweep. Work is parallelized over (grid point, tree) jobs; rows
// come back in grid order, trees within a point, policies within a tree
// (config order). Simulation streams are derived from (master_seed, size
// index, tree index, run index) — neither the policy nor the (k, e_tau)
// coordinates enter the path, so every policy and every grid point with the
// same size faces the same trees and the same epidemics.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  struct Point {
    int n, k;
    double e_tau;
    std::size_t size_index;
  };
  std::vector<Point> grid;
  for (std::size_t si = 0; si < cfg.sizes.size(); ++si)
    for (int k : cfg.k_values)
      for (double e_tau : cfg.e_tau_values) grid.push_back({cfg.sizes[si], k, e_tau, si});

  OffspringDistribution family = cfg.offspring();
  const std::size_t jobs = grid.size() * static_cast<std::size_t>(cfg.trees_per_point);
  std::vector<std::vector<ResultRow>> row_chunks(jobs);
  std::vector<std::vector<RawRow>> raw_chunks(jobs);

  parallel_for(jobs, threads, [&](std::size_t job) {
    const Point& pt = grid[job / cfg.trees_per_point];
    const std::uint64_t tree_idx = job % cfg.trees_per_point;
    // Seeds hang off (size, tree) only, so every (k, e_tau) grid point reuses
    // the same trees and the same epidemic draws: comparisons across the
    // grid are paired, and a policy whose plan ignores the delay sees
    // exactly monotone saved counts as the delay grows.
    const std::uint64_t gen_seed = derive_seed(cfg.master_seed, {pt.size_index, tree_idx, 0});
    const std::uint64_t sim_seed = derive_seed(cfg.master_seed, {pt.size_index, tree_idx, 1});
    RootedTree tree = sample_galton_watson(family, pt.n, gen_seed);
    DelayModel model = DelayModel::exponential_tau(cfg.lambda, 1.0 / pt.e_tau);
    for (const auto& policy : cfg.policies) {
      VaccinationPlan plan = select_plan(tree, pt.k, policy, model);
      std::vector<RunRecord> raw;
      RewardEstimate est = estimate_reward(tree, plan.nodes, model, cfg.runs_per_tree, sim_seed,
                                           1, cfg.emit_raw ? &raw : nullptr);
      ResultRow row;
      row.family = cfg.family_name;
      row.n = pt.n;
      row.k = pt.k;
      row.e_tau = pt.e_tau;
      row.policy = policy.name();
      row.tree_seed = gen_seed;
      row.mean_saved_fraction = est.mean / pt.n;
      row.std_error = est.std_error / pt.n;
      row.mean_never_infected_fraction = est.never_mean / pt.n;
      row.never_infected_std_error = est.never_std_error / pt.n;
      row_chunks[job].push_back(row);
      for (const auto& rec : raw)
        raw_chunks[job].push_back(
            {cfg.family_name, pt.n, pt.k, pt.e_tau, policy.name(), gen_seed, rec});
    }
  });

  ExperimentResult out;
  for (auto& chunk : row_chunks)
    out.rows.insert(out.rows.end(), chunk.begin(), chunk.end());
  for (auto& chunk : raw_chunks)
    out.raw.insert(out.raw.end(), chunk.begin(), chunk.end());
  return out;
}

inline std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "family,n,k,e_tau,policy,tree_seed,mean_saved_fraction,std_error,"
      "mean_never_infected_fraction,never_infected_std_error\n";
  for (const auto& r : rows)
    out += r.family + "," + std::to_string(r.n) + "," + std::to_string(r.k) + "," +
           format_double(r.e_tau) + "," + r.policy + "," + std::to_string(r.tree_seed) + "," +
           format_double(r.mean_saved_fraction) + "," + format_double(r.std_error) + "," +
           format_double(r.mean_never_infected_fraction) + "," +
           format_double(r.never_infected_std_error) + "\n";
  return out;
}

inline std::string format_raw_csv(const std::vector<RawRow>& raw) {
  std::string out = "family,n,k,e_tau,policy,tree_seed,run,saved_by_plan,never_infected,tau_sample\n";
  for (const auto& r : raw)
    out += r.family + "," + std::to_string(r.n) + "," + std::to_string(r.k) + "," +
           format_double(r.e_tau) + "," + r.policy + "," + std::to_string(r.tree_seed) + "," +
           std::to_string(r.rec.run) + "," + std::to_string(r.rec.saved_by_plan) + "," +
           std::to_string(r.rec.never_infected) + "," + format_double(r.rec.tau_sample) + "\n";
  return out;
}

// Writes results.csv (and raw.csv when enabled) under cfg.output_dir.
inline void write_experiment_output(const ExperimentConfig& cfg, const ExperimentResult& res) {
  std::filesystem::path dir(cfg.output_dir);
  write_file((dir / "results.csv").string(), format_results_csv(res.rows));
  if (cfg.emit_raw) write_file((dir / "raw.csv").string(), format_raw_csv(res.raw));
}

}  // namespace delayvax

#pragma once

// Self-contained acceptance checks. Each check builds its own instances from
// a seeded stream, verifies an end-to-end property of the library, and
// reports a deterministic pass/fail detail string: no timing, no paths, so
// the output of a run is reproducible byte for byte. Wall-clock budgets are
// the caller's concern (budget_seconds below states them).

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/experiment.hpp"
#include "delayvax/galton_watson.hpp"
#include "delayvax/io.hpp"
#include "delayvax/multisource.hpp"
#include "delayvax/oracle.hpp"
#include "delayvax/planner.hpp"
#include "delayvax/random.hpp"
#include "delayvax/reward.hpp"
#include "delayvax/sim.hpp"
#include "delayvax/tree.hpp"

namespace delayvax::selfcheck {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 1;
  bool full = false;     // full-scale sweep in check 6; smoke scale otherwise
  unsigned threads = 1;
  std::string cli_path;  // binary driven by check 8
  std::string work_dir;  // scratch for check 8; a temp dir when empty
};

inline const char* check_name(int id) {
  switch (id) {
    case 1: return "exact reward consistency";
    case 2: return "monotonicity and submodularity";
    case 3: return "greedy near-optimality";
    case 4: return "analytic-simulation agreement";
    case 5: return "survival kernel races";
    case 6: return "sweep dominance and trends";
    case 7: return "multi-source reductions";
    case 8: return "cli determinism";
    default: return "unknown";
  }
}

// Wall-clock ceiling per check, seconds; 0 means no pinned budget.
inline double budget_seconds(int id, bool full) {
  switch (id) {
    case 1: return 10;
    case 2: return 10;
    case 3: return 60;
    case 4: return 120;
    case 5: return 60;
    case 6: return full ? 1800 : 120;
    case 7: return 60;
    default: return 0;
  }
}

namespace detail {

inline std::string fmt(double x, int prec = 4) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", prec, x);
  return b;
}

inline CheckResult failed(int id, std::string why) {
  return {id, check_name(id), false, std::move(why)};
}

inline CheckResult passed(int id, std::string what) {
  return {id, check_name(id), true, std::move(what)};
}

// Random tree with size in [lo, hi], family and size drawn from rng.
inline RootedTree random_tree(SplitMix64& rng, int lo, int hi) {
  int n = lo + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  std::uint64_t s = rng.next_u64();
  switch (rng.uniform_below(3)) {
    case 0: return sample_galton_watson(OffspringDistribution::binary_mix(), n, s);
    case 1: return sample_galton_watson(OffspringDistribution::poisson(2.0), n, s);
    default: return sample_galton_watson(OffspringDistribution::discrete_uniform(2), n, s);
  }
}

inline DelayModel random_model(SplitMix64& rng, bool exponential_only) {
  double lambda = 0.5 + 1.5 * rng.uniform01();
  if (exponential_only || rng.uniform_below(2) == 0)
    return DelayModel::exponential_tau(lambda, 0.1 + 0.9 * rng.uniform01());
  return DelayModel::deterministic_tau(lambda, 0.5 + 9.5 * rng.uniform01());
}

// Up to `want` distinct non-root nodes (excluding `exclude`), ascending.
inline std::vector<int> random_members(SplitMix64& rng, const RootedTree& t, int want,
                                       int exclude = -1) {
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(t.node_count()));
  for (int v = 0; v < t.node_count(); ++v)
    if (v != t.root() && v != exclude) pool.push_back(v);
  if (want > static_cast<int>(pool.size())) want = static_cast<int>(pool.size());
  for (int i = 0; i < want; ++i) {
    int j = i + static_cast<int>(rng.uniform_below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(want));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// ---------------------------------------------------------------------------
// 1. Engine reward vs literal set enumeration, plus closed-form reductions
//    that must match the engine bit for bit (same accumulation order).

inline CheckResult check_c1(const CheckOptions& o) {
  SplitMix64 rng = derive_stream(o.seed, {101});
  double worst = 0.0;
  const int iters = 1000;
  for (int it = 0; it < iters; ++it) {
    RootedTree t = random_tree(rng, 2, 100);
    DelayModel m = random_model(rng, it % 2 == 1);
    int want = 1 + static_cast<int>(rng.uniform_below(12));
    std::vector<int> s = random_members(rng, t, want);
    double engine = expected_reward(t, s, m);
    double literal = exhaustive_reward_check(t, s, m);
    double diff = std::fabs(engine - literal);
    worst = std::max(worst, diff);
    if (diff > 1e-10)
      return failed(1, "instance " + std::to_string(it) + ": engine " + fmt(engine, 12) +
                           " vs set enumeration " + fmt(literal, 12));

    // Singleton: n_i * P exactly.
    int i = s[rng.uniform_below(s.size())];
    double single = expected_reward(t, {i}, m);
    double hand = static_cast<double>(t.desc_count(i)) * survival_prob(m, t.depth(i));
    if (single != hand)
      return failed(1, "instance " + std::to_string(it) + ": singleton reward " +
                           fmt(single, 17) + " != closed form " + fmt(hand, 17));

    // Antichain: no member an ancestor of another, so the exclusive counts
    // are the raw descendant counts. Accumulate in preorder like the engine.
    std::vector<int> anti = s;
    std::sort(anti.begin(), anti.end(),
              [&](int a, int b) { return t.euler_in(a) < t.euler_in(b); });
    {
      std::vector<int> kept;
      int last_out = -1;
      for (int v : anti)
        if (t.euler_in(v) >= last_out) {
          kept.push_back(v);
          last_out = t.euler_out(v);
        }
      double ref = 0.0;
      for (int v : kept)
        ref += static_cast<double>(t.desc_count(v)) * survival_prob(m, t.depth(v));
      double eng = expected_reward(t, kept, m);
      if (eng != ref)
        return failed(1, "instance " + std::to_string(it) + ": antichain reward " +
                             fmt(eng, 17) + " != closed form " + fmt(ref, 17));
    }

    // Chain: members along one root path; consecutive descendant-count
    // differences, deepest member keeps its full count.
    {
      int u = s.back();
      std::vector<int> chain;
      for (int v = u; v != t.root() && static_cast<int>(chain.size()) < 6; v = t.parent(v))
        chain.push_back(v);
      std::reverse(chain.begin(), chain.end());  // shallow to deep = preorder
      double ref = 0.0;
      for (std::size_t j = 0; j < chain.size(); ++j) {
        int c = t.desc_count(chain[j]) - (j + 1 < chain.size() ? t.desc_count(chain[j + 1]) : 0);
        ref += static_cast<double>(c) * survival_prob(m, t.depth(chain[j]));
      }
      double eng = expected_reward(t, chain, m);
      if (eng != ref)
        return failed(1, "instance " + std::to_string(it) + ": chain reward " + fmt(eng, 17) +
                             " != closed form " + fmt(ref, 17));
    }
  }
  return passed(1, std::to_string(iters) + " instances; max |engine - enumeration| = " +
                       fmt(worst, 14) + "; closed-form reductions exact");
}

// ---------------------------------------------------------------------------
// 2. Marginal gains: diminishing returns, nonnegativity, exact consistency
//    with reward differences, and the leaf boundary (a childless candidate
//    gains exactly zero; any other candidate gains strictly under an
//    exponential delay).

inline CheckResult check_c2(const CheckOptions& o) {
  SplitMix64 rng = derive_stream(o.seed, {102});
  const int iters = 1000;
  double min_gain = 0.0;
  for (int it = 0; it < iters; ++it) {
    RootedTree t = random_tree(rng, 2, 100);
    bool exponential = it % 2 == 0;
    DelayModel m = random_model(rng, exponential);
    std::vector<int> any = random_members(rng, t, 1);
    int u = any.front();
    int want = static_cast<int>(rng.uniform_below(12));
    std::vector<int> s2 = random_members(rng, t, want, u);
    std::vector<int> s1;
    for (int v : s2)
      if (rng.uniform_below(2) == 0) s1.push_back(v);

    double g1 = marginal_gain(t, s1, u, m);
    double g2 = marginal_gain(t, s2, u, m);
    min_gain = std::min(min_gain, g2);
    if (g1 < g2 - 1e-12)
      return failed(2, "instance " + std::to_string(it) + ": gain grew with the larger set (" +
                           fmt(g1, 14) + " < " + fmt(g2, 14) + ")");
    if (g2 < -1e-12)
      return failed(2, "instance " + std::to_string(it) + ": negative gain " + fmt(g2, 14));

    std::vector<int> s2u = s2;
    s2u.push_back(u);
    double direct = expected_reward(t, s2u, m) - expected_reward(t, s2, m);
    if (std::fabs(g2 - direct) > 1e-10)
      return failed(2, "instance " + std::to_string(it) + ": closed-form gain " + fmt(g2, 14) +
                           " vs reward difference " + fmt(direct, 14));

    if (exponential) {
      if (t.desc_count(u) > 0 && !(g2 > 0.0))
        return failed(2, "instance " + std::to_string(it) +
                             ": internal candidate with non-strict gain " + fmt(g2, 17));
      if (t.desc_count(u) == 0 && g2 != 0.0)
        return failed(2, "instance " + std::to_string(it) + ": childless candidate gained " +
                             fmt(g2, 17));
    }
  }
  return passed(2, std::to_string(iters) + " nested pairs; min gain " + fmt(min_gain, 14) +
                       "; diminishing returns and leaf boundary hold");
}

// ---------------------------------------------------------------------------
// 3. Greedy value against the exhaustive optimum at small sizes.

inline CheckResult check_c3(const CheckOptions& o) {
  SplitMix64 rng = derive_stream(o.seed, {103});
  const double bound = 1.0 - std::exp(-1.0);
  int instances = 0, optimal = 0;
  double min_ratio = 1.0, sum_ratio = 0.0;
  for (int i = 0; i < 50; ++i) {
    RootedTree t = random_tree(rng, 4, 25);
    DelayModel m = random_model(rng, false);
    for (int k = 1; k <= 3; ++k) {
      if (k > t.node_count() - 1) continue;
      VaccinationPlan plan = greedy_select(t, k, m, o.threads);
      double greedy = expected_reward(t, plan.nodes, m);
      if (std::fabs(greedy - plan.total_gain()) > 1e-9)
        return failed(3, "tree " + std::to_string(i) + " k=" + std::to_string(k) +
                             ": recorded gains sum to " + fmt(plan.total_gain(), 12) +
                             " but the plan is worth " + fmt(greedy, 12));
      OracleResult opt = exhaustive_optimum(t, k, m);
      double ratio;
      if (opt.best_value <= 1e-15) {
        if (greedy > 1e-12)
          return failed(3, "tree " + std::to_string(i) + ": greedy beat a zero optimum");
        ratio = 1.0;
      } else {
        ratio = greedy / opt.best_value;
      }
      if (ratio < bound - 1e-12)
        return failed(3, "tree " + std::to_string(i) + " k=" + std::to_string(k) + ": ratio " +
                             fmt(ratio, 8) + " below " + fmt(bound, 8));
      ++instances;
      if (ratio >= 1.0 - 1e-12) ++optimal;
      min_ratio = std::min(min_ratio, ratio);
      sum_ratio += ratio;
    }
  }
  return passed(3, std::to_string(instances) + " instances; ratio min " + fmt(min_ratio, 6) +
                       " mean " + fmt(sum_ratio / instances, 6) + "; exactly optimal in " +
                       std::to_string(optimal));
}

// ---------------------------------------------------------------------------
// 4. Monte-Carlo estimate of the planned reward vs the analytic value.

inline CheckResult check_c4(const CheckOptions& o) {
  const DelayModel m = DelayModel::exponential_tau(1.0, 0.1);
  const int trees = 20, runs = 10000;
  int agree = 0;
  double worst_z = 0.0;
  for (int i = 0; i < trees; ++i) {
    RootedTree t = sample_galton_watson(OffspringDistribution::binary_mix(), 200,
                                        derive_seed(o.seed, {104, static_cast<std::uint64_t>(i)}));
    VaccinationPlan plan = greedy_select(t, 5, m, o.threads);
    RewardEstimate est =
        estimate_reward(t, plan.nodes, m, runs,
                        derive_seed(o.seed, {104, static_cast<std::uint64_t>(i), 7}), o.threads);
    double analytic = expected_reward(t, plan.nodes, m);
    if (!(est.std_error > 0.0))
      return failed(4, "tree " + std::to_string(i) + ": degenerate standard error");
    double z = std::fabs(est.mean - analytic) / est.std_error;
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++agree;
  }
  if (agree < trees - 1)
    return failed(4, std::to_string(agree) + "/" + std::to_string(trees) +
                         " within 3 standard errors; worst z " + fmt(worst_z, 3));
  return passed(4, std::to_string(agree) + "/" + std::to_string(trees) +
                       " within 3 standard errors; worst z " + fmt(worst_z, 3));
}

// ---------------------------------------------------------------------------
// 5. Survival kernel vs direct races: a chain of depth d against one delay
//    draw, a million races per grid point.

inline CheckResult check_c5(const CheckOptions& o) {
  const int races = 1'000'000;
  const double lambdas[] = {0.5, 1.0, 2.0};
  double worst_z = 0.0;
  int point = 0;
  auto race_point = [&](const DelayModel& m, int d, bool fixed_tau,
                        double tau_value) -> std::optional<std::string> {
    double p = survival_prob(m, d);
    SplitMix64 rng = derive_stream(o.seed, {105, static_cast<std::uint64_t>(point++)});
    long long hits = 0;
    for (int r = 0; r < races; ++r) {
      double tau = fixed_tau ? tau_value : rng.exponential(1.0 / m.expected_tau());
      double z = 0.0;
      for (int j = 0; j < d; ++j) z += rng.exponential(m.lambda);
      if (z > tau) ++hits;
    }
    double phat = static_cast<double>(hits) / races;
    double se = std::sqrt(p * (1.0 - p) / races);
    double z = se > 0.0 ? std::fabs(phat - p) / se : 0.0;
    worst_z = std::max(worst_z, z);
    if (std::fabs(phat - p) > 3.0 * se)
      return "point " + std::to_string(point - 1) + ": empirical " + fmt(phat, 6) +
             " vs analytic " + fmt(p, 6) + " (z " + fmt(z, 2) + ")";
    return std::nullopt;
  };
  for (double lam : lambdas)
    for (double mu : {0.1, 1.0})
      for (int d : {1, 5})
        if (auto err = race_point(DelayModel::exponential_tau(lam, mu), d, false, 0.0))
          return failed(5, *err);
  for (double lam : lambdas)
    for (double tt : {1.0, 5.0})
      for (int d : {1, 5})
        if (auto err = race_point(DelayModel::deterministic_tau(lam, tt), d, true, tt))
          return failed(5, *err);
  return passed(5, std::to_string(point) + " grid points x " + std::to_string(races) +
                       " races; worst z " + fmt(worst_z, 2));
}

// ---------------------------------------------------------------------------
// 6. Full sweep reproduction: greedy dominates every baseline at every grid
//    point, saved fractions fall as the delay grows, and heavier offspring
//    degrades the planner, all at two pooled standard errors.

struct PooledPoint {
  double mean = 0.0;
  double se = 0.0;
};

// Pools per-tree means conservatively: between-tree spread over T plus the
// per-tree standard errors.
inline PooledPoint pool_point(const std::vector<std::pair<double, double>>& per_tree) {
  PooledPoint p;
  const double tcount = static_cast<double>(per_tree.size());
  for (auto& [m, se] : per_tree) p.mean += m;
  p.mean /= tcount;
  double between = 0.0, within = 0.0;
  for (auto& [m, se] : per_tree) {
    between += (m - p.mean) * (m - p.mean);
    within += se * se;
  }
  if (per_tree.size() > 1) between /= tcount - 1.0;
  p.se = std::sqrt(between / tcount + within / (tcount * tcount));
  return p;
}

using PointKey = std::tuple<int, int, double, std::string>;  // n, k, e_tau, policy

inline std::map<PointKey, PooledPoint> pool_rows(const std::vector<ResultRow>& rows) {
  std::map<PointKey, std::vector<std::pair<double, double>>> acc;
  for (const auto& r : rows)
    acc[{r.n, r.k, r.e_tau, r.policy}].push_back({r.mean_saved_fraction, r.std_error});
  std::map<PointKey, PooledPoint> out;
  for (auto& [key, v] : acc) out[key] = pool_point(v);
  return out;
}

// Greedy must not sit below any baseline by more than twice the combined
// standard error, at any grid point.
inline std::optional<std::string> dominance_gap(const std::map<PointKey, PooledPoint>& pts,
                                                double& min_margin) {
  for (const auto& [key, g] : pts) {
    if (std::get<3>(key) != "greedy") continue;
    for (const auto& [bk, b] : pts) {
      if (std::get<3>(bk) == "greedy" || std::get<0>(bk) != std::get<0>(key) ||
          std::get<1>(bk) != std::get<1>(key) || std::get<2>(bk) != std::get<2>(key))
        continue;
      double slack = 2.0 * std::sqrt(g.se * g.se + b.se * b.se);
      double margin = g.mean - b.mean;
      min_margin = std::min(min_margin, margin);
      if (margin < -slack)
        return "n=" + std::to_string(std::get<0>(key)) + " k=" + std::to_string(std::get<1>(key)) +
               " e_tau=" + fmt(std::get<2>(key), 1) + ": greedy " + fmt(g.mean, 4) + " below " +
               std::get<3>(bk) + " " + fmt(b.mean, 4);
    }
  }
  return std::nullopt;
}

inline ExperimentConfig sweep_base(const CheckOptions& o, std::uint64_t salt) {
  ExperimentConfig cfg;
  cfg.lambda = 1.0;
  cfg.trees_per_point = o.full ? 10 : 2;
  cfg.runs_per_tree = o.full ? 1000 : 200;
  cfg.master_seed = derive_seed(o.seed, {106, salt});
  return cfg;
}

inline CheckResult check_c6(const CheckOptions& o) {
  double min_margin = 1.0;
  int points = 0;

  // Delay sweep: three sizes, five expected delays, four policies.
  ExperimentConfig tau_cfg = sweep_base(o, 1);
  tau_cfg.sizes = {100, 500, 1000};
  tau_cfg.k_values = {5};
  tau_cfg.e_tau_values = {2, 4, 6, 8, 10};
  auto tau_pts = pool_rows(run_experiment(tau_cfg, o.threads).rows);
  points += static_cast<int>(tau_pts.size());
  if (auto gap = dominance_gap(tau_pts, min_margin)) return failed(6, "delay sweep: " + *gap);
  for (const auto& pol : tau_cfg.policies)
    for (int n : tau_cfg.sizes)
      for (std::size_t j = 0; j + 1 < tau_cfg.e_tau_values.size(); ++j) {
        const PooledPoint a = tau_pts.at({n, 5, tau_cfg.e_tau_values[j], pol.name()});
        const PooledPoint b = tau_pts.at({n, 5, tau_cfg.e_tau_values[j + 1], pol.name()});
        double slack = 2.0 * std::sqrt(a.se * a.se + b.se * b.se);
        if (b.mean > a.mean + slack)
          return failed(6, "delay trend: " + std::string(pol.name()) + " n=" + std::to_string(n) +
                               " rose from e_tau " + fmt(tau_cfg.e_tau_values[j], 0) + " (" +
                               fmt(a.mean, 4) + ") to " + fmt(tau_cfg.e_tau_values[j + 1], 0) +
                               " (" + fmt(b.mean, 4) + ")");
      }

  // Budget sweep: one size, ten budgets.
  ExperimentConfig k_cfg = sweep_base(o, 2);
  k_cfg.sizes = {1000};
  k_cfg.k_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  k_cfg.e_tau_values = {10};
  auto k_pts = pool_rows(run_experiment(k_cfg, o.threads).rows);
  points += static_cast<int>(k_pts.size());
  if (auto gap = dominance_gap(k_pts, min_margin)) return failed(6, "budget sweep: " + *gap);

  // Offspring families: per-mean dominance and a falling greedy trend as the
  // offspring mean grows.
  for (const char* family : {"uniform", "poisson"}) {
    std::vector<PooledPoint> greedy_by_mean;
    for (double mean : {2.0, 3.0, 4.0, 5.0}) {
      ExperimentConfig f_cfg = sweep_base(o, family[0] == 'u' ? 30 + static_cast<std::uint64_t>(mean)
                                                              : 40 + static_cast<std::uint64_t>(mean));
      f_cfg.family_name = family;
      f_cfg.family_mean = mean;
      f_cfg.sizes = {1000};
      f_cfg.k_values = {5};
      f_cfg.e_tau_values = {10};
      f_cfg.policies.push_back(PolicyKind::top_k_children());
      auto f_pts = pool_rows(run_experiment(f_cfg, o.threads).rows);
      points += static_cast<int>(f_pts.size());
      if (auto gap = dominance_gap(f_pts, min_margin))
        return failed(6, std::string(family) + " mean " + fmt(mean, 0) + ": " + *gap);
      greedy_by_mean.push_back(f_pts.at({1000, 5, 10.0, "greedy"}));
    }
    for (std::size_t j = 0; j + 1 < greedy_by_mean.size(); ++j) {
      const PooledPoint a = greedy_by_mean[j], b = greedy_by_mean[j + 1];
      double slack = 2.0 * std::sqrt(a.se * a.se + b.se * b.se);
      if (b.mean > a.mean + slack)
        return failed(6, std::string(family) + " trend: greedy rose from offspring mean " +
                             std::to_string(j + 2) + " (" + fmt(a.mean, 4) + ") to " +
                             std::to_string(j + 3) + " (" + fmt(b.mean, 4) + ")");
    }
  }

  return passed(6, std::to_string(points) + " pooled grid points; min greedy margin " +
                       fmt(min_margin, 4) + "; delay and offspring trends hold");
}

// ---------------------------------------------------------------------------
// 7. Multi-source reductions: the connected split, the distant decomposition
//    partition, residual rewards against independent set arithmetic, and the
//    planner against the exhaustive composite optimum.

// Residual reward recomputed from scratch: per-view descendant sets built by
// walking parent chains, intersected across views, nothing shared with the
// library's counting path.
inline double residual_reward_brute(const ResidualComponent& res, const std::vector<int>& s_local,
                                    const DelayModel& m) {
  const int f = res.size();
  const int views = static_cast<int>(res.source_ids.size());
  auto desc_from = [&](int view, int i) {
    std::vector<char> in(static_cast<std::size_t>(f), 0);
    for (int j = 0; j < f; ++j)
      for (int a = res.parent_from[static_cast<std::size_t>(view)][static_cast<std::size_t>(j)];
           a >= 0; a = res.parent_from[static_cast<std::size_t>(view)][static_cast<std::size_t>(a)])
        if (a == i) {
          in[static_cast<std::size_t>(j)] = 1;
          break;
        }
    return in;
  };
  double total = 0.0;
  for (int i : s_local) {
    std::vector<char> joint = desc_from(0, i);
    for (int v = 1; v < views; ++v) {
      std::vector<char> other = desc_from(v, i);
      for (int j = 0; j < f; ++j) joint[static_cast<std::size_t>(j)] &= other[static_cast<std::size_t>(j)];
    }
    std::vector<char> covered(static_cast<std::size_t>(f), 0);
    for (int j : s_local) {
      if (j == i || !joint[static_cast<std::size_t>(j)]) continue;
      std::vector<char> dj = desc_from(0, j);
      for (int v = 1; v < views; ++v) {
        std::vector<char> other = desc_from(v, j);
        for (int x = 0; x < f; ++x) dj[static_cast<std::size_t>(x)] &= other[static_cast<std::size_t>(x)];
      }
      for (int x = 0; x < f; ++x)
        if (dj[static_cast<std::size_t>(x)]) covered[static_cast<std::size_t>(x)] = 1;
    }
    long long count = 0;
    for (int x = 0; x < f; ++x)
      if (joint[static_cast<std::size_t>(x)] && !covered[static_cast<std::size_t>(x)]) ++count;
    double p = 1.0;
    for (int v = 0; v < views; ++v)
      p *= survival_prob(m, res.depth_from[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)]);
    total += static_cast<double>(count) * p;
  }
  return total;
}

// Undirected BFS distance from `source` through the fragment only.
inline std::vector<int> fragment_distances(const RootedTree& t, const std::vector<char>& in_frag,
                                           int source) {
  std::vector<int> dist(static_cast<std::size_t>(t.node_count()), -1);
  std::vector<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int v = queue[head];
    auto visit = [&](int w) {
      if (w >= 0 && in_frag[static_cast<std::size_t>(w)] && dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(w);
      }
    };
    if (t.has_parent(v)) visit(t.parent(v));
    for (int w : t.children(v)) visit(w);
  }
  return dist;
}

inline std::vector<std::pair<int, int>> undirected_edges(const RootedTree& t) {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < t.node_count(); ++v)
    if (t.has_parent(v)) e.push_back({std::min(v, t.parent(v)), std::max(v, t.parent(v))});
  std::sort(e.begin(), e.end());
  return e;
}

inline CheckResult check_c7(const CheckOptions& o) {
  SplitMix64 rng = derive_stream(o.seed, {107});
  const DelayModel unit = DelayModel::exponential_tau(1.0, 1.0);

  // Fixed instance: two equal branches below a connected infected core; the
  // planner must alternate between the branch components.
  {
    RootedTree t = RootedTree::from_parents({std::nullopt, 0, 0, 1, 2, 3, 4});
    auto inst = MultiSourceInstance::make(t, {0, 1, 2});
    VaccinationPlan plan = plan_multisource(inst, 4, unit, o.threads);
    if (plan.nodes != std::vector<int>{3, 4, 5, 6} || plan.tree_of != std::vector<int>{0, 1, 0, 1})
      return failed(7, "equal-branch instance: selection did not alternate between components");
  }

  // Fixed fragment: a member whose joint subtree holds another member; the
  // deeper member must stay counted.
  {
    RootedTree t = RootedTree::from_parents({std::nullopt, 0, 1, 2, 2});
    auto inst = normalize_root(MultiSourceInstance::make(t, {0, 3}));
    Decomposition d = decompose_distant_sources(inst);
    if (d.residual_trees.size() != 1 ||
        d.residual_trees[0].node_ids != std::vector<int>{1, 2, 4})
      return failed(7, "y-fragment instance: unexpected decomposition");
    const ResidualComponent& res = d.residual_trees[0];
    double r2 = multisource_reward(res, {2}, unit);
    double r24 = multisource_reward(res, {2, 4}, unit);
    if (std::fabs(r2 - 0.375) > 1e-15 || std::fabs(r24 - 0.375) > 1e-15)
      return failed(7, "y-fragment rewards off: r({2}) = " + fmt(r2, 17) + ", r({2,4}) = " +
                           fmt(r24, 17) + ", both should be 0.375");
    if (multisource_reward(res, {4}, unit) != 0.0)
      return failed(7, "y-fragment: empty joint subtree must contribute zero");
  }

  // Fixed path between two sources: every joint subtree is empty.
  {
    RootedTree t = RootedTree::from_parents({std::nullopt, 0, 1, 2, 3});
    auto inst = normalize_root(MultiSourceInstance::make(t, {0, 4}));
    Decomposition d = decompose_distant_sources(inst);
    if (d.residual_trees.size() != 1) return failed(7, "path instance: expected one fragment");
    const std::vector<std::vector<int>> sets = {{1}, {2}, {3}, {1, 2, 3}};
    for (const auto& s : sets)
      if (multisource_reward(d.residual_trees[0], s, unit) != 0.0)
        return failed(7, "path instance: contested fragment must be worth zero");
  }

  // Single-view fragment reduces to the plain reward.
  {
    RootedTree t = RootedTree::from_parents({std::nullopt, 0, 1, 1});
    ResidualComponent res = build_residual(t, {1, 2, 3}, {0});
    const std::vector<std::vector<int>> sets = {{1}, {1, 2}, {2, 3}, {1, 2, 3}};
    for (const auto& s : sets) {
      double lhs = multisource_reward(res, s, unit);
      double rhs = expected_reward(t, s, unit);
      if (std::fabs(lhs - rhs) > 1e-14)
        return failed(7, "single-view fragment disagrees with the plain reward: " + fmt(lhs, 17) +
                             " vs " + fmt(rhs, 17));
    }
  }

  // (a) Connected infected subtrees: the component split plus the forest
  // planner must reproduce the top-level planner exactly, and the distant
  // decomposition must come back with no residual fragments.
  int connected_checked = 0;
  for (int it = 0; it < 200 && connected_checked < 30; ++it) {
    RootedTree t = random_tree(rng, 3, 40);
    std::vector<int> sources{t.root()};
    for (int v : t.preorder()) {
      if (v == t.root() || static_cast<int>(sources.size()) >= 5) continue;
      bool parent_in = std::find(sources.begin(), sources.end(), t.parent(v)) != sources.end();
      if (parent_in && rng.uniform_below(3) == 0) sources.push_back(v);
    }
    int healthy = t.node_count() - static_cast<int>(sources.size());
    if (healthy < 1) continue;
    DelayModel m = random_model(rng, false);
    int k = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(std::min(4, healthy))));
    auto inst = MultiSourceInstance::make(t, sources);
    if (!sources_connected(inst)) return failed(7, "generator produced a disconnected core");

    Decomposition d = decompose_distant_sources(inst);
    if (!d.residual_trees.empty())
      return failed(7, "connected core left a residual fragment");

    auto comps = split_connected_sources(inst);
    std::vector<RootedTree> forest;
    forest.reserve(comps.size());
    for (auto& c : comps) forest.push_back(c.tree);
    VaccinationPlan manual = forest_greedy(forest, k, m, o.threads);
    for (std::size_t i = 0; i < manual.nodes.size(); ++i)
      manual.nodes[i] = comps[static_cast<std::size_t>(manual.tree_of[i])]
                            .orig_id[static_cast<std::size_t>(manual.nodes[i])];
    VaccinationPlan top = plan_multisource(inst, k, m, o.threads);
    if (manual.nodes != top.nodes || manual.tree_of != top.tree_of || manual.gains != top.gains)
      return failed(7, "connected instance " + std::to_string(it) +
                           ": split-and-plan differs from the top-level planner");
    ++connected_checked;
  }
  if (connected_checked < 30)
    return failed(7, "only " + std::to_string(connected_checked) + " connected instances checked");

  // (b) Distant decomposition partitions the node set; fragment distances
  // match a plain BFS; every fragment touches at least two sources.
  int partitions = 0, residual_rewards = 0;
  double worst_resid = 0.0;
  for (int it = 0; it < 200; ++it) {
    RootedTree t = random_tree(rng, 2, 60);
    int m_sources =
        1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(std::min(6, t.node_count()))));
    std::vector<int> pool(static_cast<std::size_t>(t.node_count()));
    for (int v = 0; v < t.node_count(); ++v) pool[static_cast<std::size_t>(v)] = v;
    for (int i = 0; i < m_sources; ++i) {
      int j = i + static_cast<int>(rng.uniform_below(pool.size() - static_cast<std::size_t>(i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    std::vector<int> sources(pool.begin(), pool.begin() + m_sources);
    auto raw_inst = MultiSourceInstance::make(t, sources);
    auto inst = normalize_root(raw_inst);
    if (undirected_edges(raw_inst.tree) != undirected_edges(inst.tree))
      return failed(7, "normalization changed the undirected edge set");
    Decomposition d = decompose_distant_sources(inst);

    const int n = inst.tree.node_count();
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const auto& c : d.single_source_trees) {
      if (!inst.is_source(c.source()))
        return failed(7, "component rooted at a healthy node " + std::to_string(c.source()));
      for (int v : c.orig_id) {
        if (v != c.source() && inst.is_source(v))
          return failed(7, "source " + std::to_string(v) + " buried inside a component");
        if (v != c.source()) ++seen[static_cast<std::size_t>(v)];
      }
    }
    for (const auto& res : d.residual_trees) {
      if (res.source_ids.size() < 2)
        return failed(7, "fragment with fewer than two adjacent sources");
      for (int v : res.node_ids) {
        if (inst.is_source(v)) return failed(7, "source inside a fragment");
        ++seen[static_cast<std::size_t>(v)];
      }
      std::vector<char> in_frag(static_cast<std::size_t>(n), 0);
      for (int v : res.node_ids) in_frag[static_cast<std::size_t>(v)] = 1;
      for (std::size_t si = 0; si < res.source_ids.size(); ++si) {
        std::vector<char> with_src = in_frag;
        with_src[static_cast<std::size_t>(res.source_ids[si])] = 1;
        std::vector<int> dist = fragment_distances(inst.tree, with_src, res.source_ids[si]);
        for (int j = 0; j < res.size(); ++j) {
          int v = res.node_ids[static_cast<std::size_t>(j)];
          int direct = res.depth_from[si][static_cast<std::size_t>(j)];
          if (dist[static_cast<std::size_t>(v)] != direct)
            return failed(7, "fragment distance mismatch at node " + std::to_string(v) + ": " +
                                 std::to_string(direct) + " vs bfs " +
                                 std::to_string(dist[static_cast<std::size_t>(v)]));
          int par = res.parent_from[si][static_cast<std::size_t>(j)];
          int expect = par < 0 ? 1 : res.depth_from[si][static_cast<std::size_t>(par)] + 1;
          if (direct != expect)
            return failed(7, "fragment parent/depth inconsistency at node " + std::to_string(v));
        }
      }
      if (res.source_ids.size() >= 3 && d.notes.empty())
        return failed(7, "three-source fragment produced no advisory note");
    }
    for (int v = 0; v < n; ++v) {
      int expect = inst.is_source(v) ? 0 : 1;
      if (seen[static_cast<std::size_t>(v)] != expect)
        return failed(7, "node " + std::to_string(v) + " covered " +
                             std::to_string(seen[static_cast<std::size_t>(v)]) +
                             " times in the decomposition");
    }
    ++partitions;

    // (c) Residual rewards against the from-scratch evaluator.
    if (n <= 20) {
      for (const auto& res : d.residual_trees) {
        for (int trial = 0; trial < 5; ++trial) {
          std::vector<int> locals;
          for (int j = 0; j < res.size(); ++j)
            if (rng.uniform_below(2) == 0) locals.push_back(j);
          if (locals.empty()) locals.push_back(static_cast<int>(rng.uniform_below(
              static_cast<std::uint64_t>(res.size()))));
          std::vector<int> orig;
          orig.reserve(locals.size());
          for (int j : locals) orig.push_back(res.node_ids[static_cast<std::size_t>(j)]);
          DelayModel m = random_model(rng, false);
          double lib = multisource_reward(res, orig, m);
          double brute = residual_reward_brute(res, locals, m);
          worst_resid = std::max(worst_resid, std::fabs(lib - brute));
          if (std::fabs(lib - brute) > 1e-12)
            return failed(7, "fragment reward " + fmt(lib, 14) + " vs recomputation " +
                                 fmt(brute, 14));
        }
        ++residual_rewards;
      }
    }
  }
  if (residual_rewards < 5)
    return failed(7, "only " + std::to_string(residual_rewards) +
                         " fragments exercised the reward recomputation");

  // (d) Planner value against the exhaustive optimum of the decomposed
  // objective (sum of component rewards); the greedy guarantee applies to
  // that objective as a whole.
  const double bound = 1.0 - std::exp(-1.0);
  int composite_checked = 0;
  double min_comp_ratio = 1.0;
  for (int it = 0; it < 60 && composite_checked < 15; ++it) {
    RootedTree t = random_tree(rng, 8, 20);
    int other = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(t.node_count() - 1)));
    auto inst = normalize_root(MultiSourceInstance::make(t, {t.root(), other}));
    int healthy = inst.tree.node_count() - 2;
    if (healthy < 1) continue;
    DelayModel m = random_model(rng, false);
    int k = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(std::min(3, healthy))));
    Decomposition d = decompose_distant_sources(inst);

    auto composite_value = [&](const std::vector<int>& chosen) {
      double total = 0.0;
      for (const auto& c : d.single_source_trees) {
        std::vector<int> locals;
        for (int v : chosen) {
          auto pos = std::lower_bound(c.orig_id.begin(), c.orig_id.end(), v);
          if (pos != c.orig_id.end() && *pos == v)
            locals.push_back(static_cast<int>(pos - c.orig_id.begin()));
        }
        total += expected_reward(c.tree, locals, m);
      }
      for (const auto& res : d.residual_trees) {
        std::vector<int> members;
        for (int v : chosen)
          if (std::binary_search(res.node_ids.begin(), res.node_ids.end(), v)) members.push_back(v);
        total += multisource_reward(res, members, m);
      }
      return total;
    };

    std::vector<int> candidates;
    for (int v = 0; v < inst.tree.node_count(); ++v)
      if (!inst.is_source(v)) candidates.push_back(v);
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    double best = 0.0;
    const int cn = static_cast<int>(candidates.size());
    while (true) {
      std::vector<int> chosen;
      chosen.reserve(static_cast<std::size_t>(k));
      for (int i : idx) chosen.push_back(candidates[static_cast<std::size_t>(i)]);
      best = std::max(best, composite_value(chosen));
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == cn - k + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < k; ++q)
        idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
    }

    VaccinationPlan plan = plan_multisource(inst, k, m, o.threads);
    double achieved = composite_value(plan.nodes);
    if (achieved > best + 1e-12)
      return failed(7, "planner value " + fmt(achieved, 12) + " above the exhaustive optimum " +
                           fmt(best, 12));
    double ratio = best <= 1e-15 ? 1.0 : achieved / best;
    min_comp_ratio = std::min(min_comp_ratio, ratio);
    if (ratio < bound - 1e-9)
      return failed(7, "planner ratio " + fmt(ratio, 8) + " below " + fmt(bound, 8) +
                           " on the decomposed objective");
    ++composite_checked;
  }
  if (composite_checked < 10)
    return failed(7, "only " + std::to_string(composite_checked) + " composite optima enumerated");

  return passed(7, std::to_string(connected_checked) + " connected splits exact; " +
                       std::to_string(partitions) + " partitions verified; " +
                       std::to_string(residual_rewards) + " fragments recomputed (max diff " +
                       fmt(worst_resid, 14) + "); " + std::to_string(composite_checked) +
                       " composite optima, min ratio " + fmt(min_comp_ratio, 6));
}

// ---------------------------------------------------------------------------
// 8. Byte-for-byte CLI determinism: every subcommand run twice with the same
//    seed must produce identical streams and artifacts.

struct CliScenario {
  std::string name;
  std::string args;   // {D} = per-run output dir, {S} = staged inputs
  bool expect_ok = true;
};

inline std::string substitute(std::string s, const std::string& key, const std::string& value) {
  for (std::size_t at = s.find(key); at != std::string::npos; at = s.find(key, at))
    s.replace(at, key.size(), value), at += value.size();
  return s;
}

inline CheckResult check_c8(const CheckOptions& o) {
  namespace fs = std::filesystem;
  if (o.cli_path.empty()) return failed(8, "cli binary path not provided");

  fs::path base = o.work_dir.empty() ? fs::temp_directory_path() / "delayvax_selfcheck"
                                     : fs::path(o.work_dir);
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base / "stage");
  const std::string stage = (base / "stage").string();

  // Staged inputs, produced through the library so the scenarios only
  // exercise the binary under test.
  const DelayModel m_stage = DelayModel::exponential_tau(1.0, 0.1);
  RootedTree tree40 =
      sample_galton_watson(OffspringDistribution::binary_mix(), 40, derive_seed(o.seed, {108, 1}));
  RootedTree tree12 =
      sample_galton_watson(OffspringDistribution::poisson(2.0), 12, derive_seed(o.seed, {108, 2}));
  write_file(stage + "/tree40.txt", format_tree(tree40));
  write_file(stage + "/tree12.txt", format_tree(tree12));
  write_file(stage + "/plan.csv", format_plan(greedy_select(tree40, 5, m_stage)));
  write_file(stage + "/exp.cfg",
             "family = binary\n"
             "sizes = 30\n"
             "k_values = 2\n"
             "e_tau_values = 2\n"
             "lambda = 1\n"
             "trees_per_point = 2\n"
             "runs_per_tree = 60\n"
             "policies = greedy,top_k_nns\n"
             "master_seed = 11\n"
             "emit_raw = true\n");

  const std::vector<CliScenario> scenarios = {
      {"gen_binary", "gen-tree --family binary --size 40 --seed 7 --out {D}/tree.txt"},
      {"gen_poisson", "gen-tree --family poisson --mean 2.5 --size 25 --seed 8 --out {D}/tree.txt"},
      {"plan_greedy",
       "plan --tree {S}/tree40.txt --policy greedy --k 5 --lambda 1 --e-tau 10 --out {D}/plan.csv"},
      {"plan_frontier",
       "plan --tree {S}/tree40.txt --policy top_k_frontiers --k 5 --lambda 1 --e-tau 4 "
       "--out {D}/plan.csv"},
      {"plan_multi",
       "plan --tree {S}/tree40.txt --sources 0,7 --policy greedy --k 4 --lambda 1 --e-tau 10 "
       "--out {D}/plan.csv --report {D}/decomposition.txt"},
      {"simulate",
       "simulate --tree {S}/tree40.txt --plan {S}/plan.csv --lambda 1 --e-tau 10 --runs 400 "
       "--seed 9 --out {D}/summary.csv --raw-out {D}/raw.csv"},
      {"oracle", "oracle --tree {S}/tree12.txt --k 2 --lambda 1 --e-tau 5 --out {D}/oracle.txt"},
      {"experiment", "experiment --config {S}/exp.cfg --seed 5 --out {D}/exp"},
      {"verify", "verify --criterion 1 --seed 3"},
      {"bad_policy", "plan --tree {S}/tree40.txt --policy nope --k 2 --lambda 1 --e-tau 5", false},
  };

  int files_compared = 0;
  for (const auto& sc : scenarios) {
    int status[2] = {0, 0};
    fs::path dirs[2];
    for (int run = 0; run < 2; ++run) {
      fs::path dir = base / (sc.name + (run == 0 ? "_a" : "_b"));
      fs::create_directories(dir);
      dirs[run] = dir;
      std::string args = substitute(substitute(sc.args, "{D}", dir.string()), "{S}", stage);
      std::string cmd = "'" + o.cli_path + "' " + args + " > '" + (dir / "stdout.txt").string() +
                        "' 2> '" + (dir / "stderr.txt").string() + "'";
      int raw = std::system(cmd.c_str());
      status[run] = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    }
    if (status[0] != status[1])
      return failed(8, sc.name + ": exit codes differ between reruns (" +
                           std::to_string(status[0]) + " vs " + std::to_string(status[1]) + ")");
    if (sc.expect_ok && status[0] != 0)
      return failed(8, sc.name + ": exit code " + std::to_string(status[0]));
    if (!sc.expect_ok && status[0] == 0)
      return failed(8, sc.name + ": expected a failure exit code");

    // Every artifact (streams included) must match byte for byte.
    auto listing = [](const fs::path& dir) {
      std::vector<std::string> rel;
      for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), dir).string());
      std::sort(rel.begin(), rel.end());
      return rel;
    };
    std::vector<std::string> in_a = listing(dirs[0]);
    if (in_a != listing(dirs[1]))
      return failed(8, sc.name + ": reruns produced different artifact sets");
    for (const std::string& rel : in_a) {
      if (read_file((dirs[0] / rel).string()) != read_file((dirs[1] / rel).string()))
        return failed(8, sc.name + ": artifact " + rel + " differs between reruns");
      ++files_compared;
    }
  }
  return passed(8, std::to_string(scenarios.size()) + " scenarios, " +
                       std::to_string(files_compared) + " artifacts byte-identical");
}

}  // namespace detail

inline CheckResult run_check(int id, const CheckOptions& o) {
  try {
    switch (id) {
      case 1: return detail::check_c1(o);
      case 2: return detail::check_c2(o);
      case 3: return detail::check_c3(o);
      case 4: return detail::check_c4(o);
      case 5: return detail::check_c5(o);
      case 6: return detail::check_c6(o);
      case 7: return detail::check_c7(o);
      case 8: return detail::check_c8(o);
      default: fail(Errc::config_invalid, "no such criterion: " + std::to_string(id));
    }
  } catch (const Error& e) {
    return detail::failed(id, std::string("unexpected error: ") + errc_name(e.code()) + ": " +
                                  e.what());
  } catch (const std::exception& e) {
    return detail::failed(id, std::string("unexpected error: ") + e.what());
  }
}

inline std::vector<CheckResult> run_checks(const std::vector<int>& ids, const CheckOptions& o) {
  std::vector<CheckResult> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(run_check(id, o));
  return out;
}

}  // namespace delayvax::selfcheck

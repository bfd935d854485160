#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/parallel.hpp"
#include "delayvax/random.hpp"
#include "delayvax/reward.hpp"
#include "delayvax/tree.hpp"

namespace delayvax {

// One realization of the race between the infection wave and the vaccine.
// infection_time[v] is +infinity for nodes the wave never reaches.
struct EpidemicOutcome {
  std::vector<double> infection_time;
  std::vector<int> immune_set;  // plan nodes the wave never reaches, ascending
  int saved_by_plan = 0;        // nodes strictly below an immune plan node
  int never_infected = 0;       // saved_by_plan plus the immune frontier
  double tau_sample = 0.0;
};

namespace detail {

// Core pass shared by the single-tree and forest simulators. Draws one
// passage time per edge in preorder — unconditionally, so the draw sequence
// depends only on the tree, never on the plan. z[v] is the unblocked
// arrival time; along any root path it is nondecreasing, so "some ancestor
// immune" is equivalent to "deepest planned ancestor immune" and counting
// blocked-parent nodes as saved estimates the analytic reward exactly.
inline void run_wave(const RootedTree& t, const std::vector<char>& planned, double tau,
                     const DelayModel& m, SplitMix64& rng, std::vector<double>& time,
                     EpidemicOutcome& agg) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> z(t.node_count(), 0.0);
  std::vector<char> blocked(t.node_count(), 0);
  time.assign(t.node_count(), inf);
  time[t.root()] = 0.0;
  for (int v : t.preorder()) {
    if (v == t.root()) continue;
    int p = t.parent(v);
    z[v] = z[p] + rng.exponential(m.lambda);
    bool outraced = planned[v] && z[v] > tau;  // vaccine beat the unblocked wave
    if (blocked[p]) {
      blocked[v] = 1;
      ++agg.saved_by_plan;
      ++agg.never_infected;
      if (planned[v]) agg.immune_set.push_back(v);  // delay elapses, wave never comes
    } else if (outraced) {
      blocked[v] = 1;
      ++agg.never_infected;
      agg.immune_set.push_back(v);
    } else {
      time[v] = z[v];
    }
  }
}

}  // namespace detail

inline EpidemicOutcome simulate_once(const RootedTree& t, const std::vector<int>& plan,
                                     const DelayModel& m, SplitMix64& rng) {
  std::vector<int> members = detail::check_plan_set(t, plan);
  std::vector<char> planned(t.node_count(), 0);
  for (int v : members) planned[v] = 1;

  EpidemicOutcome out;
  out.tau_sample = m.sample_tau(rng);
  detail::run_wave(t, planned, out.tau_sample, m, rng, out.infection_time, out);
  std::sort(out.immune_set.begin(), out.immune_set.end());
  return out;
}

// Forest variant: one shared delay draw covers every tree in the snapshot,
// then each tree's epidemic spreads from its own root. immune_set holds
// (tree-local) ids offset by each tree's start in the concatenated universe.
inline EpidemicOutcome simulate_once_forest(const std::vector<RootedTree>& forest,
                                            const std::vector<std::vector<int>>& plans,
                                            const DelayModel& m, SplitMix64& rng) {
  if (plans.size() != forest.size())
    fail(Errc::config_invalid, "one plan per tree is required");
  EpidemicOutcome agg;
  agg.tau_sample = m.sample_tau(rng);
  std::vector<double> time;
  int offset = 0;
  for (std::size_t ti = 0; ti < forest.size(); ++ti) {
    const RootedTree& t = forest[ti];
    std::vector<int> members = detail::check_plan_set(t, plans[ti]);
    std::vector<char> planned(t.node_count(), 0);
    for (int v : members) planned[v] = 1;
    std::size_t immune_before = agg.immune_set.size();
    detail::run_wave(t, planned, agg.tau_sample, m, rng, time, agg);
    for (std::size_t i = immune_before; i < agg.immune_set.size(); ++i)
      agg.immune_set[i] += offset;
    agg.infection_time.insert(agg.infection_time.end(), time.begin(), time.end());
    offset += t.node_count();
  }
  return agg;
}

struct RunRecord {
  int run = 0;
  int saved_by_plan = 0;
  int never_infected = 0;
  double tau_sample = 0.0;
};

struct RewardEstimate {
  double mean = 0.0;       // mean saved_by_plan, the analytic reward's estimator
  double std_error = 0.0;  // sample standard error of that mean
  double never_mean = 0.0;
  double never_std_error = 0.0;
};

namespace detail {

inline void mean_and_se(const std::vector<int>& xs, double& mean, double& se) {
  const std::size_t n = xs.size();
  long long sum = 0;
  for (int x : xs) sum += x;
  mean = static_cast<double>(sum) / static_cast<double>(n);
  if (n < 2) {
    se = 0.0;
    return;
  }
  double ss = 0.0;
  for (int x : xs) {
    double d = static_cast<double>(x) - mean;
    ss += d * d;
  }
  se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

}  // namespace detail

// Repeated simulation with one derived random stream per run, so the result
// is independent of thread count and identical across plans evaluated under
// the same seed. Counts are aggregated in run order as integers.
inline RewardEstimate estimate_reward(const RootedTree& t, const std::vector<int>& plan,
                                      const DelayModel& m, int runs, std::uint64_t seed,
                                      unsigned threads = 1,
                                      std::vector<RunRecord>* raw = nullptr) {
  if (runs < 1) fail(Errc::config_invalid, "runs must be >= 1");
  std::vector<int> saved(runs), never(runs);
  std::vector<double> taus(runs);
  parallel_for(static_cast<std::size_t>(runs), threads, [&](std::size_t r) {
    SplitMix64 rng = derive_stream(seed, {static_cast<std::uint64_t>(r)});
    EpidemicOutcome o = simulate_once(t, plan, m, rng);
    saved[r] = o.saved_by_plan;
    never[r] = o.never_infected;
    taus[r] = o.tau_sample;
  });
  if (raw)
    for (int r = 0; r < runs; ++r) raw->push_back({r, saved[r], never[r], taus[r]});
  RewardEstimate est;
  detail::mean_and_se(saved, est.mean, est.std_error);
  detail::mean_and_se(never, est.never_mean, est.never_std_error);
  return est;
}

}  // namespace delayvax

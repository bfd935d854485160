#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "delayvax/errors.hpp"
#include "delayvax/parallel.hpp"
#include "delayvax/reward.hpp"

namespace delayvax {

// Vaccination policy. threshold_layers applies to top_k_frontiers only;
// -1 derives ceil(lambda * E[tau]) from the delay model at selection time.
struct PolicyKind {
  enum class Id { greedy, top_k_descendants, top_k_nns, top_k_frontiers, top_k_children };

  Id id = Id::greedy;
  int threshold_layers = -1;

  static PolicyKind greedy() { return {Id::greedy, -1}; }
  static PolicyKind top_k_descendants() { return {Id::top_k_descendants, -1}; }
  static PolicyKind top_k_nns() { return {Id::top_k_nns, -1}; }
  static PolicyKind top_k_frontiers(int layers = -1) { return {Id::top_k_frontiers, layers}; }
  static PolicyKind top_k_children() { return {Id::top_k_children, -1}; }

  const char* name() const {
    switch (id) {
      case Id::greedy: return "greedy";
      case Id::top_k_descendants: return "top_k_descendants";
      case Id::top_k_nns: return "top_k_nns";
      case Id::top_k_frontiers: return "top_k_frontiers";
      case Id::top_k_children: return "top_k_children";
    }
    return "?";
  }

  static PolicyKind parse(const std::string& token) {
    if (token == "greedy") return greedy();
    if (token == "top_k_descendants") return top_k_descendants();
    if (token == "top_k_nns") return top_k_nns();
    if (token == "top_k_frontiers") return top_k_frontiers();
    if (token == "top_k_children") return top_k_children();
    fail(Errc::config_invalid,
         "unknown policy `" + token +
             "`; expected greedy|top_k_descendants|top_k_nns|top_k_frontiers|top_k_children");
  }
};

namespace detail {

inline void check_budget(int k, int candidates) {
  if (k < 1) fail(Errc::budget_exceeds_candidates, "budget must be >= 1");
  if (k > candidates)
    fail(Errc::budget_exceeds_candidates, "budget " + std::to_string(k) + " exceeds " +
                                              std::to_string(candidates) +
                                              " available candidates");
}

}  // namespace detail

// Iteratively adds the candidate with the largest marginal gain, ties broken
// by smallest node id. The root is never a candidate. Candidate gains within
// one iteration may be evaluated concurrently; selection is serialized after
// the join, so the plan is independent of `threads`.
inline VaccinationPlan greedy_select(const RootedTree& t, int k, const DelayModel& m,
                                     unsigned threads = 1) {
  detail::check_budget(k, t.node_count() - 1);
  VaccinationPlan plan;
  std::vector<char> selected(t.node_count(), 0);
  std::vector<double> gain(t.node_count());
  for (int step = 0; step < k; ++step) {
    auto sweep = detail::sweep_members(t, plan.nodes);
    parallel_for(t.node_count(), threads, [&](std::size_t v) {
      int u = static_cast<int>(v);
      gain[v] = (u == t.root() || selected[v])
                    ? -std::numeric_limits<double>::infinity()
                    : detail::gain_with_sweep(t, sweep, u, m);
    });
    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < t.node_count(); ++v) {
      if (gain[v] > best_gain) {
        best_gain = gain[v];
        best = v;
      }
    }
    selected[best] = 1;
    plan.nodes.push_back(best);
    plan.gains.push_back(best_gain);
  }
  return plan;
}

// Greedy over a forest of independent trees: keeps one best candidate per
// tree, admits the globally best gain each iteration, and refreshes only the
// originating tree's candidate. The total reward is additive across trees,
// so this equals joint greedy under the tie-break (tree index, node id).
inline VaccinationPlan forest_greedy(const std::vector<RootedTree>& forest, int k,
                                     const DelayModel& m, unsigned threads = 1) {
  int candidates = 0;
  for (const auto& t : forest) candidates += t.node_count() - 1;
  detail::check_budget(k, candidates);

  std::vector<std::vector<int>> sets(forest.size());
  struct Best {
    int node = -1;
    double gain = -std::numeric_limits<double>::infinity();
  };
  std::vector<Best> best(forest.size());

  auto refresh = [&](std::size_t ti) {
    const RootedTree& t = forest[ti];
    auto sweep = detail::sweep_members(t, sets[ti]);
    Best b;
    std::vector<char> in_set(t.node_count(), 0);
    for (int v : sets[ti]) in_set[v] = 1;
    std::vector<double> gain(t.node_count());
    parallel_for(t.node_count(), threads, [&](std::size_t v) {
      int u = static_cast<int>(v);
      gain[v] = (u == t.root() || in_set[v])
                    ? -std::numeric_limits<double>::infinity()
                    : detail::gain_with_sweep(t, sweep, u, m);
    });
    for (int v = 0; v < t.node_count(); ++v) {
      if (gain[v] > b.gain) {
        b.gain = gain[v];
        b.node = v;
      }
    }
    best[ti] = b;
  };
  for (std::size_t ti = 0; ti < forest.size(); ++ti) refresh(ti);

  VaccinationPlan plan;
  for (int step = 0; step < k; ++step) {
    std::size_t win = forest.size();
    for (std::size_t ti = 0; ti < forest.size(); ++ti) {
      if (best[ti].node < 0) continue;
      if (win == forest.size() || best[ti].gain > best[win].gain) win = ti;
    }
    plan.nodes.push_back(best[win].node);
    plan.gains.push_back(best[win].gain);
    plan.tree_of.push_back(static_cast<int>(win));
    sets[win].push_back(best[win].node);
    refresh(win);
  }
  return plan;
}

// Reward-oblivious baseline rankings; gains are recorded as zeros.
inline VaccinationPlan baseline_select(const RootedTree& t, int k, const PolicyKind& policy,
                                       const DelayModel& m) {
  detail::check_budget(k, t.node_count() - 1);
  if (policy.id == PolicyKind::Id::greedy)
    fail(Errc::config_invalid, "greedy is not a baseline; use greedy_select");

  std::vector<int> cand;
  cand.reserve(t.node_count() - 1);
  for (int v = 0; v < t.node_count(); ++v)
    if (v != t.root()) cand.push_back(v);

  auto by_desc = [&](int a, int b) {
    if (t.desc_count(a) != t.desc_count(b)) return t.desc_count(a) > t.desc_count(b);
    return a < b;
  };

  switch (policy.id) {
    case PolicyKind::Id::top_k_descendants:
      std::sort(cand.begin(), cand.end(), by_desc);
      break;
    case PolicyKind::Id::top_k_nns:
      std::sort(cand.begin(), cand.end(), [&](int a, int b) {
        if (t.depth(a) != t.depth(b)) return t.depth(a) < t.depth(b);
        return a < b;
      });
      break;
    case PolicyKind::Id::top_k_children:
      std::sort(cand.begin(), cand.end(), [&](int a, int b) {
        auto ca = t.children(a).size(), cb = t.children(b).size();
        if (ca != cb) return ca > cb;
        return a < b;
      });
      break;
    case PolicyKind::Id::top_k_frontiers: {
      int layers = policy.threshold_layers >= 0
                       ? policy.threshold_layers
                       : static_cast<int>(std::ceil(m.lambda * m.expected_tau()));
      // nodes at or beyond the layer threshold, by descendant count; if the
      // filter leaves fewer than k, top up from below the threshold,
      // deepest layers first
      std::vector<int> far, near;
      for (int v : cand) (t.depth(v) >= layers ? far : near).push_back(v);
      std::sort(far.begin(), far.end(), by_desc);
      std::sort(near.begin(), near.end(), [&](int a, int b) {
        if (t.depth(a) != t.depth(b)) return t.depth(a) > t.depth(b);
        if (t.desc_count(a) != t.desc_count(b)) return t.desc_count(a) > t.desc_count(b);
        return a < b;
      });
      cand = std::move(far);
      cand.insert(cand.end(), near.begin(), near.end());
      break;
    }
    case PolicyKind::Id::greedy: break;  // unreachable
  }

  VaccinationPlan plan;
  plan.nodes.assign(cand.begin(), cand.begin() + k);
  plan.gains.assign(k, 0.0);
  return plan;
}

inline VaccinationPlan select_plan(const RootedTree& t, int k, const PolicyKind& policy,
                                   const DelayModel& m, unsigned threads = 1) {
  return policy.id == PolicyKind::Id::greedy ? greedy_select(t, k, m, threads)
                                             : baseline_select(t, k, policy, m);
}

}  // namespace delayvax

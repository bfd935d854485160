#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/tree.hpp"

namespace delayvax {

// Ordered vaccination target set with the marginal gain recorded at each
// selection step. tree_of tags the originating tree for forest plans and is
// empty for single-tree plans.
struct VaccinationPlan {
  std::vector<int> nodes;
  std::vector<double> gains;
  std::vector<int> tree_of;
  std::vector<std::string> notes;

  double total_gain() const {
    double s = 0.0;
    for (double g : gains) s += g;
    return s;
  }
};

namespace detail {

// Members of s sorted by preorder position, paired with the index (into the
// sorted list) of each member's deepest strict ancestor within s, or -1.
// Ancestor chains are nested preorder intervals, so one stack sweep suffices.
struct MemberSweep {
  std::vector<int> sorted;       // member ids, preorder order
  std::vector<int> anc_index;    // index into `sorted`, -1 if none
};

inline MemberSweep sweep_members(const RootedTree& t, std::vector<int> s) {
  std::sort(s.begin(), s.end(),
            [&](int a, int b) { return t.euler_in(a) < t.euler_in(b); });
  s.erase(std::unique(s.begin(), s.end()), s.end());
  MemberSweep out;
  out.sorted = std::move(s);
  out.anc_index.assign(out.sorted.size(), -1);
  std::vector<int> stack;
  for (std::size_t i = 0; i < out.sorted.size(); ++i) {
    int j = out.sorted[i];
    while (!stack.empty() && !t.is_ancestor(out.sorted[stack.back()], j)) stack.pop_back();
    if (!stack.empty()) out.anc_index[i] = stack.back();
    stack.push_back(static_cast<int>(i));
  }
  return out;
}

// Validates a plan set and returns it sorted ascending without duplicates.
inline std::vector<int> check_plan_set(const RootedTree& t, const std::vector<int>& s) {
  std::vector<int> out(s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (int v : out) {
    if (v < 0 || v >= t.node_count())
      fail(Errc::invalid_node_id, "plan member " + std::to_string(v));
    if (v == t.root())
      fail(Errc::source_in_plan, "node " + std::to_string(v) + " is the source");
  }
  return out;
}

// Marginal gain of u against a prepared member sweep; one sweep can serve
// many candidates. c_u is u's exclusive descendant count against the set; a
// member inside u's subtree is maximal there iff its own deepest in-set
// ancestor lies outside that subtree.
inline double gain_with_sweep(const RootedTree& t, const MemberSweep& sweep, int u,
                              const DelayModel& m) {
  long long c_u = t.desc_count(u);
  int deepest_anc = -1;
  for (std::size_t j = 0; j < sweep.sorted.size(); ++j) {
    int member = sweep.sorted[j];
    if (t.is_ancestor(u, member)) {
      int a = sweep.anc_index[j];
      if (a < 0 || !t.is_ancestor(u, sweep.sorted[a])) c_u -= t.desc_count(member);
    } else if (t.is_ancestor(member, u)) {
      if (deepest_anc < 0 || t.depth(member) > t.depth(deepest_anc)) deepest_anc = member;
    }
  }
  double p_u = survival_prob(m, t.depth(u));
  double p_v = deepest_anc < 0 ? 0.0 : survival_prob(m, t.depth(deepest_anc));
  return static_cast<double>(c_u) * (p_u - p_v);
}

}  // namespace detail

// n_i minus the union of descendant sets of plan members inside i's subtree.
// The union collapses to the maximal members' descendant counts: maximal
// members are pairwise incomparable, so their descendant sets are disjoint,
// and every non-maximal member's set nests inside one of them. The maximal
// members themselves stay counted.
inline int exclusive_desc_count(const RootedTree& t, const std::vector<int>& s, int i) {
  detail::check_plan_set(t, s);
  auto sweep = detail::sweep_members(t, s);
  auto pos = std::find(sweep.sorted.begin(), sweep.sorted.end(), i);
  if (pos == sweep.sorted.end())
    fail(Errc::not_in_set, "node " + std::to_string(i) + " is not in the plan set");
  int idx = static_cast<int>(pos - sweep.sorted.begin());
  int excl = t.desc_count(i);
  for (std::size_t j = 0; j < sweep.sorted.size(); ++j)
    if (sweep.anc_index[j] == idx) excl -= t.desc_count(sweep.sorted[j]);
  return excl;
}

// Expected number of saved nodes for the whole plan set: each member
// contributes its exclusive descendant count weighted by its survival
// probability.
inline double expected_reward(const RootedTree& t, const std::vector<int>& s,
                              const DelayModel& m) {
  detail::check_plan_set(t, s);
  auto sweep = detail::sweep_members(t, s);
  std::vector<int> excl(sweep.sorted.size());
  for (std::size_t i = 0; i < sweep.sorted.size(); ++i) excl[i] = t.desc_count(sweep.sorted[i]);
  for (std::size_t j = 0; j < sweep.sorted.size(); ++j)
    if (sweep.anc_index[j] >= 0) excl[sweep.anc_index[j]] -= t.desc_count(sweep.sorted[j]);
  double total = 0.0;
  for (std::size_t i = 0; i < sweep.sorted.size(); ++i)
    total += static_cast<double>(excl[i]) * survival_prob(m, t.depth(sweep.sorted[i]));
  return total;
}

// Closed-form marginal gain of adding u to s, equal to
// expected_reward(s + u) - expected_reward(s):
//
//   no ancestor of u in s:   c_u * P{Z_u > tau}
//   v = deepest such ancestor: c_u * (P{Z_u > tau} - P{Z_v > tau})
//
// where c_u is u's exclusive descendant count against s.
inline double marginal_gain(const RootedTree& t, const std::vector<int>& s, int u,
                            const DelayModel& m) {
  detail::check_plan_set(t, s);
  if (u < 0 || u >= t.node_count()) fail(Errc::invalid_node_id, "node " + std::to_string(u));
  if (u == t.root()) fail(Errc::source_in_plan, "node " + std::to_string(u) + " is the source");
  if (std::find(s.begin(), s.end(), u) != s.end())
    fail(Errc::already_selected, "node " + std::to_string(u) + " is already in the plan");
  return detail::gain_with_sweep(t, detail::sweep_members(t, s), u, m);
}

}  // namespace delayvax

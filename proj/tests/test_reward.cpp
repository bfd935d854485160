#include <cmath>
#include <numeric>

#include "test_util.hpp"

using namespace delayvax;
using Catch::Matchers::WithinAbs;
using testutil::code_of;

namespace {

// Exclusive count straight from the definition: descendants of i not covered
// by any other member's descendant set inside i's subtree.
int brute_exclusive(const RootedTree& t, const std::vector<int>& s, int i) {
  int count = 0;
  for (int w = 0; w < t.node_count(); ++w) {
    if (!t.is_ancestor(i, w)) continue;
    bool covered = false;
    for (int j : s)
      if (j != i && t.is_ancestor(i, j) && t.is_ancestor(j, w)) covered = true;
    if (!covered) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("reward hand values, matched rates") {
  DelayModel m = testutil::unit_model();
  REQUIRE(expected_reward(testutil::path_tree(3), {1}, m) == 0.5);
  REQUIRE(expected_reward(testutil::path_tree(4), {1, 2}, m) == 1.25);
  // two independent branches of depth two
  RootedTree twig = RootedTree::from_parents({std::nullopt, 0, 1, 0, 3});
  REQUIRE(expected_reward(twig, {1, 3}, m) == 1.0);
  REQUIRE(expected_reward(testutil::bench_tree(), {1, 2, 3, 6}, m) == 4.875);
  REQUIRE(expected_reward(testutil::bench_tree(), {}, m) == 0.0);
}

TEST_CASE("reward under a fixed delay") {
  DelayModel m = DelayModel::deterministic_tau(1.0, 1.0);
  REQUIRE_THAT(expected_reward(testutil::bench_tree(), {1}, m),
               WithinAbs(7.0 * std::exp(-1.0), 1e-15));
}

TEST_CASE("exclusive descendant counts") {
  RootedTree t = testutil::bench_tree();
  std::vector<int> s{1, 2, 3, 6};
  REQUIRE(exclusive_desc_count(t, s, 1) == 2);
  REQUIRE(exclusive_desc_count(t, s, 2) == 2);
  REQUIRE(exclusive_desc_count(t, s, 3) == 2);
  REQUIRE(exclusive_desc_count(t, s, 6) == 1);
  REQUIRE(code_of([&] { exclusive_desc_count(t, s, 4); }) == Errc::not_in_set);
}

TEST_CASE("nested members keep the maximal layer counted") {
  // regression: a selected node is excluded from its ancestors' counts only
  // through its own descendant set, never by its own membership
  DelayModel m = testutil::unit_model();
  RootedTree p5 = testutil::path_tree(5);
  REQUIRE(expected_reward(p5, {1, 2}, m) == 2.0);
  REQUIRE(exhaustive_reward_check(p5, {1, 2}, m) == 2.0);
  REQUIRE(exhaustive_reward_check(testutil::path_tree(4), {1, 2}, m) == 1.25);
}

TEST_CASE("duplicates in the plan set are harmless") {
  DelayModel m = testutil::unit_model();
  RootedTree t = testutil::bench_tree();
  REQUIRE(expected_reward(t, {2, 1, 2, 1}, m) == expected_reward(t, {1, 2}, m));
}

TEST_CASE("plan validation errors") {
  DelayModel m = testutil::unit_model();
  RootedTree t = testutil::bench_tree();
  REQUIRE(code_of([&] { expected_reward(t, {0, 1}, m); }) == Errc::source_in_plan);
  REQUIRE(code_of([&] { expected_reward(t, {1, 99}, m); }) == Errc::invalid_node_id);
  REQUIRE(code_of([&] { expected_reward(t, {-1}, m); }) == Errc::invalid_node_id);
  REQUIRE(code_of([&] { marginal_gain(t, {1}, 0, m); }) == Errc::source_in_plan);
  REQUIRE(code_of([&] { marginal_gain(t, {1}, 1, m); }) == Errc::already_selected);
  REQUIRE(code_of([&] { marginal_gain(t, {1}, 42, m); }) == Errc::invalid_node_id);
}

TEST_CASE("marginal gain hand values") {
  DelayModel m = testutil::unit_model();
  RootedTree p4 = testutil::path_tree(4);
  REQUIRE(marginal_gain(p4, {1}, 2, m) == 0.25);
  REQUIRE(marginal_gain(p4, {}, 2, m) == 0.75);
  RootedTree t = testutil::bench_tree();
  REQUIRE(marginal_gain(t, {}, 1, m) == 3.5);
  // a leaf owns no descendants, so its gain is exactly zero
  REQUIRE(marginal_gain(t, {1}, 8, m) == 0.0);
  REQUIRE(marginal_gain(t, {}, 8, m) == 0.0);
}

TEST_CASE("marginal gain equals the reward difference") {
  SplitMix64 rng(901);
  for (int rep = 0; rep < 50; ++rep) {
    RootedTree t =
        sample_galton_watson(OffspringDistribution::poisson(2.0), 5 + static_cast<int>(rng.uniform_below(56)),
                             rng.next_u64());
    DelayModel m = rep % 2 == 0 ? DelayModel::exponential_tau(1.0, 0.3)
                                : DelayModel::deterministic_tau(1.0, 2.0);
    std::vector<int> s;
    for (int v = 1; v < t.node_count(); ++v)
      if (rng.uniform_below(4) == 0) s.push_back(v);
    for (int u = 1; u < t.node_count(); ++u) {
      if (std::find(s.begin(), s.end(), u) != s.end()) continue;
      std::vector<int> grown(s);
      grown.push_back(u);
      double lhs = marginal_gain(t, s, u, m);
      double rhs = expected_reward(t, grown, m) - expected_reward(t, s, m);
      REQUIRE_THAT(lhs, WithinAbs(rhs, 1e-10));
    }
  }
}

TEST_CASE("sweep and bitset evaluations agree on random instances") {
  SplitMix64 rng(321);
  for (int rep = 0; rep < 40; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::binary_mix(),
                                        10 + static_cast<int>(rng.uniform_below(191)),
                                        rng.next_u64());
    DelayModel m = DelayModel::exponential_tau(1.0, 0.4);
    std::vector<int> s;
    for (int v = 1; v < t.node_count(); ++v)
      if (rng.uniform_below(3) == 0) s.push_back(v);
    if (s.empty()) s.push_back(t.node_count() - 1);
    REQUIRE_THAT(expected_reward(t, s, m), WithinAbs(exhaustive_reward_check(t, s, m), 1e-10));
    double total = 0.0;
    for (int i : s) total += exclusive_desc_count(t, s, i) * survival_prob(m, t.depth(i));
    REQUIRE_THAT(expected_reward(t, s, m), WithinAbs(total, 1e-10));
    for (int i : s) REQUIRE(exclusive_desc_count(t, s, i) == brute_exclusive(t, s, i));
  }
}

TEST_CASE("reward is invariant to node relabeling") {
  SplitMix64 rng(555);
  DelayModel m = DelayModel::exponential_tau(1.2, 0.5);
  for (int rep = 0; rep < 20; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::poisson(2.0), 40, rng.next_u64());
    int n = t.node_count();
    // random permutation of ids
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[rng.uniform_below(static_cast<std::uint64_t>(i) + 1)]);
    std::vector<std::optional<int>> parents(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
      if (t.has_parent(v))
        parents[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] =
            perm[static_cast<std::size_t>(t.parent(v))];
    RootedTree relabeled = RootedTree::from_parents(parents);
    std::vector<int> s, mapped;
    for (int v = 1; v < n; ++v)
      if (rng.uniform_below(3) == 0) {
        s.push_back(v);
        mapped.push_back(perm[static_cast<std::size_t>(v)]);
      }
    REQUIRE_THAT(expected_reward(t, s, m), WithinAbs(expected_reward(relabeled, mapped, m), 1e-12));
  }
}

TEST_CASE("plan gain bookkeeping") {
  VaccinationPlan p;
  REQUIRE(p.total_gain() == 0.0);
  p.gains = {1.5, 0.25};
  REQUIRE(p.total_gain() == 1.75);
}

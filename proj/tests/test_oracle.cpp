#include <cmath>

#include "test_util.hpp"

using namespace delayvax;
using Catch::Matchers::WithinAbs;
using testutil::code_of;

TEST_CASE("single-pick optimum is the best marginal gain") {
  OracleResult r = exhaustive_optimum(testutil::bench_tree(), 1, testutil::unit_model());
  REQUIRE(r.best_set == std::vector<int>{1});
  REQUIRE(r.best_value == 3.5);
  REQUIRE(r.evaluated == 8);
}

TEST_CASE("pair optimum on the bench tree") {
  OracleResult r = exhaustive_optimum(testutil::bench_tree(), 2, testutil::unit_model());
  REQUIRE(r.best_set == std::vector<int>{1, 3});
  REQUIRE(r.best_value == 4.25);
  REQUIRE(r.evaluated == 28);  // C(8, 2)
}

TEST_CASE("value ties keep the lexicographically smallest set") {
  RootedTree t = RootedTree::from_parents({std::nullopt, 0, 0, 1, 2});
  OracleResult r = exhaustive_optimum(t, 1, testutil::unit_model());
  REQUIRE(r.best_set == std::vector<int>{1});
  REQUIRE(r.best_value == 0.5);
}

TEST_CASE("search-space guardrails") {
  RootedTree big = sample_galton_watson(OffspringDistribution::binary_mix(), 40, 5);
  DelayModel m = testutil::unit_model();
  REQUIRE(code_of([&] { exhaustive_optimum(big, 5, m, 1000); }) == Errc::search_space_too_large);
  RootedTree t = testutil::bench_tree();
  REQUIRE(code_of([&] { exhaustive_optimum(t, 0, m); }) == Errc::budget_exceeds_candidates);
  REQUIRE(code_of([&] { exhaustive_optimum(t, 9, m); }) == Errc::budget_exceeds_candidates);
}

TEST_CASE("oracle value dominates greedy within the guarantee") {
  SplitMix64 rng(606);
  const double bound = 1.0 - std::exp(-1.0);
  for (int rep = 0; rep < 10; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::poisson(2.0),
                                        6 + static_cast<int>(rng.uniform_below(9)),
                                        rng.next_u64());
    DelayModel m = rep % 2 == 0 ? DelayModel::exponential_tau(1.0, 0.5)
                                : DelayModel::deterministic_tau(1.0, 1.5);
    int k = 1 + static_cast<int>(rng.uniform_below(3));
    if (k > t.node_count() - 1) k = t.node_count() - 1;
    OracleResult opt = exhaustive_optimum(t, k, m);
    VaccinationPlan p = greedy_select(t, k, m);
    double g = expected_reward(t, p.nodes, m);
    REQUIRE(g <= opt.best_value + 1e-12);
    if (opt.best_value > 0.0) REQUIRE(g >= bound * opt.best_value - 1e-12);
    // the winning set's reported value must match the reward evaluator
    REQUIRE_THAT(opt.best_value, WithinAbs(expected_reward(t, opt.best_set, m), 1e-10));
  }
}

TEST_CASE("bitset evaluator agrees with the sweep on random plans") {
  SplitMix64 rng(707);
  for (int rep = 0; rep < 25; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::binary_mix(),
                                        5 + static_cast<int>(rng.uniform_below(120)),
                                        rng.next_u64());
    DelayModel m = DelayModel::deterministic_tau(1.0, 2.0);
    std::vector<int> s;
    for (int v = 1; v < t.node_count(); ++v)
      if (rng.uniform_below(3) == 0) s.push_back(v);
    if (s.empty()) continue;
    REQUIRE_THAT(exhaustive_reward_check(t, s, m), WithinAbs(expected_reward(t, s, m), 1e-10));
  }
}

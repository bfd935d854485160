#include <algorithm>

#include "test_util.hpp"

using namespace delayvax;
using Catch::Matchers::WithinAbs;
using testutil::code_of;

namespace {

MultiSourceInstance path5_scattered() {
  return MultiSourceInstance::make(testutil::path_tree(5), {0, 3});
}

// 0 -> 1 -> 2 -> {3, 4}; infected at the top and at one arm's tip.
MultiSourceInstance y_instance() {
  return MultiSourceInstance::make(RootedTree::from_parents({std::nullopt, 0, 1, 2, 2}), {0, 3});
}

}  // namespace

TEST_CASE("instance construction") {
  MultiSourceInstance inst =
      MultiSourceInstance::make(testutil::path_tree(4), {2, 0, 2});
  REQUIRE(inst.sources == std::vector<int>{0, 2});
  REQUIRE(inst.is_source(2));
  REQUIRE_FALSE(inst.is_source(1));
  REQUIRE(code_of([] { MultiSourceInstance::make(testutil::path_tree(3), {}); }) ==
          Errc::config_invalid);
  REQUIRE(code_of([] { MultiSourceInstance::make(testutil::path_tree(3), {5}); }) ==
          Errc::invalid_node_id);
}

TEST_CASE("normalization reroots at the smallest source") {
  MultiSourceInstance inst = MultiSourceInstance::make(testutil::path_tree(5), {2});
  MultiSourceInstance norm = normalize_root(inst);
  REQUIRE(norm.tree.root() == 2);
  REQUIRE(norm.tree.node_count() == 5);
  REQUIRE(norm.sources == inst.sources);
  // already rooted at a source: untouched
  MultiSourceInstance fixed = MultiSourceInstance::make(testutil::path_tree(5), {0, 3});
  REQUIRE(normalize_root(fixed).tree.same_structure(fixed.tree));
}

TEST_CASE("source connectivity predicate") {
  REQUIRE(sources_connected(MultiSourceInstance::make(testutil::path_tree(5), {0, 1})));
  REQUIRE_FALSE(sources_connected(path5_scattered()));
  REQUIRE_FALSE(sources_connected(MultiSourceInstance::make(testutil::path_tree(5), {1})));
}

TEST_CASE("splitting a connected infected subtree") {
  auto comps =
      split_connected_sources(MultiSourceInstance::make(testutil::path_tree(5), {0, 1}));
  REQUIRE(comps.size() == 1);
  REQUIRE(comps[0].source() == 1);
  REQUIRE(comps[0].orig_id == std::vector<int>{1, 2, 3, 4});
  REQUIRE(comps[0].tree.node_count() == 4);
  REQUIRE(comps[0].tree.root() == 0);  // local id of source 1

  // every node infected: nothing to plan for
  REQUIRE(split_connected_sources(MultiSourceInstance::make(testutil::path_tree(2), {0, 1}))
              .empty());

  REQUIRE(code_of([] {
            split_connected_sources(MultiSourceInstance::make(testutil::path_tree(3), {1}));
          }) == Errc::root_not_source);
  REQUIRE(code_of([] { split_connected_sources(path5_scattered()); }) ==
          Errc::sources_not_connected);
}

TEST_CASE("planning around a connected source cluster") {
  // 0 -> {1, 2}, 1 -> 3 -> 5, 2 -> 4 -> 6; infected: 0, 1, 2
  RootedTree t = RootedTree::from_parents({std::nullopt, 0, 0, 1, 2, 3, 4});
  MultiSourceInstance inst = MultiSourceInstance::make(t, {0, 1, 2});
  VaccinationPlan p = plan_multisource(inst, 4, testutil::unit_model());
  REQUIRE(p.nodes == std::vector<int>{3, 4, 5, 6});
  REQUIRE(p.tree_of == std::vector<int>{0, 1, 0, 1});
  REQUIRE(p.notes.empty());
}

TEST_CASE("decomposing scattered sources on a path") {
  Decomposition d = decompose_distant_sources(path5_scattered());
  REQUIRE(d.single_source_trees.size() == 1);
  REQUIRE(d.single_source_trees[0].source() == 3);
  REQUIRE(d.single_source_trees[0].orig_id == std::vector<int>{3, 4});
  REQUIRE(d.residual_trees.size() == 1);
  REQUIRE(d.residual_trees[0].node_ids == std::vector<int>{1, 2});
  REQUIRE(d.residual_trees[0].source_ids == std::vector<int>{0, 3});
  REQUIRE(d.notes.empty());
  REQUIRE(format_decomposition(d) ==
          "single_source_trees 1\n"
          "tree 0 source 3 nodes 4\n"
          "residual_trees 1\n"
          "residual 0 sources 0 3 nodes 1 2\n");
}

TEST_CASE("a node pinched between two waves never survives both") {
  // on the path every healthy node is behind one source from the other's
  // viewpoint, so the joint subtrees are empty and the residual is worthless
  Decomposition d = decompose_distant_sources(path5_scattered());
  const ResidualComponent& res = d.residual_trees[0];
  REQUIRE(res.joint_desc[0].empty());
  REQUIRE(res.joint_desc[1].empty());
  DelayModel m = testutil::unit_model();
  REQUIRE(multisource_reward(res, {1}, m) == 0.0);
  REQUIRE(multisource_reward(res, {1, 2}, m) == 0.0);
}

TEST_CASE("residual geometry of the y instance") {
  Decomposition d = decompose_distant_sources(y_instance());
  REQUIRE(d.single_source_trees.empty());
  REQUIRE(d.residual_trees.size() == 1);
  const ResidualComponent& res = d.residual_trees[0];
  REQUIRE(res.node_ids == std::vector<int>{1, 2, 4});
  REQUIRE(res.source_ids == std::vector<int>{0, 3});
  // distances from each source, indexed by local id
  REQUIRE(res.depth_from[0] == std::vector<int>{1, 2, 3});
  REQUIRE(res.depth_from[1] == std::vector<int>{2, 1, 2});
  REQUIRE(res.joint_desc[0].empty());
  REQUIRE(res.joint_desc[1] == std::vector<int>{2});
  REQUIRE(res.joint_desc[2].empty());

  DelayModel m = testutil::unit_model();
  // node 2 shields node 4 from both waves: 1 * P{2 edges} * P{1 edge}
  REQUIRE_THAT(multisource_reward(res, {2}, m), WithinAbs(0.375, 1e-15));
  // node 4 is maximal below 2, so adding it must not change the count
  REQUIRE_THAT(multisource_reward(res, {2, 4}, m), WithinAbs(0.375, 1e-15));
  REQUIRE(multisource_reward(res, {4}, m) == 0.0);
  REQUIRE_THAT(multisource_reward(res, {1, 2, 4}, m), WithinAbs(0.375, 1e-15));
}

TEST_CASE("residual reward validation") {
  Decomposition d = decompose_distant_sources(y_instance());
  const ResidualComponent& res = d.residual_trees[0];
  DelayModel m = testutil::unit_model();
  REQUIRE(code_of([&] { multisource_reward(res, {0}, m); }) == Errc::source_in_plan);
  REQUIRE(code_of([&] { multisource_reward(res, {3}, m); }) == Errc::source_in_plan);
  REQUIRE(code_of([&] { multisource_reward(res, {7}, m); }) == Errc::inconsistent_universe);
}

TEST_CASE("residual assembly rejects inconsistent inputs") {
  RootedTree p5 = testutil::path_tree(5);
  REQUIRE(code_of([&] { build_residual(p5, {1, 2}, {2}); }) == Errc::inconsistent_universe);
  REQUIRE(code_of([&] { build_residual(p5, {1, 2}, {0, 4}); }) == Errc::inconsistent_universe);
  REQUIRE(code_of([&] { build_residual(p5, {1, 3}, {0}); }) == Errc::inconsistent_universe);
  REQUIRE(code_of([&] { build_residual(p5, {}, {0}); }) == Errc::inconsistent_universe);
  REQUIRE(code_of([&] { build_residual(p5, {9}, {0}); }) == Errc::invalid_node_id);
}

TEST_CASE("three waves converging on one fragment") {
  // 0 -> 1 -> 2 -> 3, 1 -> 4; infected: 0, 3, 4
  RootedTree t = RootedTree::from_parents({std::nullopt, 0, 1, 2, 1});
  MultiSourceInstance inst = MultiSourceInstance::make(t, {0, 3, 4});
  Decomposition d = decompose_distant_sources(inst);
  REQUIRE(d.single_source_trees.empty());
  REQUIRE(d.residual_trees.size() == 1);
  REQUIRE(d.residual_trees[0].node_ids == std::vector<int>{1, 2});
  REQUIRE(d.residual_trees[0].source_ids == std::vector<int>{0, 3, 4});
  REQUIRE(d.notes.size() == 1);
  REQUIRE(d.notes[0].find("3 sources") != std::string::npos);

  VaccinationPlan p = plan_multisource(inst, 1, testutil::unit_model());
  REQUIRE(p.nodes == std::vector<int>{1});
  REQUIRE(p.gains == std::vector<double>{0.0});
  REQUIRE(p.notes.size() == 2);
}

TEST_CASE("planning across scattered sources") {
  VaccinationPlan p = plan_multisource(path5_scattered(), 3, testutil::unit_model());
  REQUIRE(p.nodes == std::vector<int>{4, 1, 2});
  REQUIRE(p.tree_of == std::vector<int>{0, 1, 1});
  REQUIRE(p.total_gain() == 0.0);
  REQUIRE_FALSE(p.notes.empty());
  REQUIRE(p.notes[0].find("no approximation guarantee") != std::string::npos);
  REQUIRE(code_of([] { plan_multisource(path5_scattered(), 4, testutil::unit_model()); }) ==
          Errc::budget_exceeds_candidates);
}

TEST_CASE("residual gains in a plan equal reward differences") {
  VaccinationPlan p = plan_multisource(y_instance(), 2, testutil::unit_model());
  REQUIRE(p.nodes == std::vector<int>{2, 1});
  REQUIRE_THAT(p.gains[0], WithinAbs(0.375, 1e-15));
  REQUIRE(p.gains[1] == 0.0);
}

TEST_CASE("a lone non-root source reduces to plain greedy after rerooting") {
  MultiSourceInstance inst = MultiSourceInstance::make(testutil::path_tree(5), {2});
  VaccinationPlan p = plan_multisource(inst, 1, testutil::unit_model());
  REQUIRE(p.nodes == std::vector<int>{1});
  // same answer as greedy on the rerooted tree
  VaccinationPlan direct = greedy_select(testutil::path_tree(5).rerooted(2), 1,
                                         testutil::unit_model());
  REQUIRE(direct.nodes == p.nodes);
}

TEST_CASE("plans never touch a source and respect the healthy budget") {
  SplitMix64 rng(2611);
  for (int rep = 0; rep < 20; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::poisson(2.0),
                                        8 + static_cast<int>(rng.uniform_below(33)),
                                        rng.next_u64());
    std::vector<int> sources;
    for (int v = 0; v < t.node_count(); ++v)
      if (rng.uniform_below(5) == 0) sources.push_back(v);
    if (sources.empty()) sources.push_back(static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(t.node_count()))));
    MultiSourceInstance inst = MultiSourceInstance::make(t, sources);
    int healthy = t.node_count() - static_cast<int>(inst.sources.size());
    if (healthy < 1) continue;
    int k = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(healthy)));
    VaccinationPlan p = plan_multisource(inst, k, testutil::unit_model());
    REQUIRE(p.nodes.size() == static_cast<std::size_t>(k));
    std::vector<int> uniq(p.nodes);
    std::sort(uniq.begin(), uniq.end());
    REQUIRE(std::adjacent_find(uniq.begin(), uniq.end()) == uniq.end());
    for (int v : p.nodes) REQUIRE_FALSE(inst.is_source(v));
  }
}

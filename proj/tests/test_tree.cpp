#include <algorithm>
#include <set>

#include "test_util.hpp"

using namespace delayvax;
using testutil::code_of;

namespace {

std::vector<std::pair<int, int>> undirected_edges(const RootedTree& t) {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < t.node_count(); ++v)
    if (t.has_parent(v)) e.push_back({std::min(v, t.parent(v)), std::max(v, t.parent(v))});
  std::sort(e.begin(), e.end());
  return e;
}

}  // namespace

TEST_CASE("from_parents builds the expected shape") {
  RootedTree t = testutil::bench_tree();
  REQUIRE(t.node_count() == 9);
  REQUIRE(t.root() == 0);
  REQUIRE_FALSE(t.has_parent(0));
  REQUIRE(t.parent(8) == 6);
  REQUIRE(t.children(1) == std::vector<int>{2, 3});
  REQUIRE(t.children(8).empty());
  REQUIRE(t.depth(0) == 0);
  REQUIRE(t.depth(4) == 3);
  REQUIRE(t.depth(8) == 4);
}

TEST_CASE("descendant counts are strict") {
  RootedTree t = testutil::bench_tree();
  REQUIRE(t.desc_count(0) == 8);
  REQUIRE(t.desc_count(1) == 7);
  REQUIRE(t.desc_count(2) == 2);
  REQUIRE(t.desc_count(3) == 3);
  REQUIRE(t.desc_count(6) == 1);
  REQUIRE(t.desc_count(8) == 0);
}

TEST_CASE("construction rejects malformed parent vectors") {
  REQUIRE(code_of([] { RootedTree::from_parents({std::nullopt, std::nullopt}); }) ==
          Errc::multiple_roots);
  REQUIRE(code_of([] { RootedTree::from_parents({std::nullopt, 1}); }) == Errc::cycle_detected);
  REQUIRE(code_of([] { RootedTree::from_parents({std::nullopt, 7}); }) == Errc::invalid_node_id);
  REQUIRE(code_of([] { RootedTree::from_parents({std::nullopt, 2, 1}); }) == Errc::cycle_detected);
  REQUIRE(code_of([] { RootedTree::from_parents({1, 0}); }) == Errc::cycle_detected);
  REQUIRE(code_of([] { RootedTree::from_parents({}); }) == Errc::invalid_node_id);
}

TEST_CASE("from_edges accepts shuffled undirected edges") {
  RootedTree ref = testutil::bench_tree();
  std::vector<std::pair<int, int>> edges = {{8, 6}, {1, 0}, {3, 6}, {2, 4},
                                            {1, 2}, {5, 2}, {7, 3}, {1, 3}};
  RootedTree t = RootedTree::from_edges(9, 0, edges);
  REQUIRE(t.same_structure(ref));
  for (int v = 0; v < t.node_count(); ++v)
    REQUIRE(std::is_sorted(t.children(v).begin(), t.children(v).end()));
}

TEST_CASE("from_edges rejects cycles and unreachable nodes") {
  REQUIRE(code_of([] { RootedTree::from_edges(3, 0, {{0, 1}, {1, 2}, {2, 0}}); }) ==
          Errc::cycle_detected);
  REQUIRE(code_of([] { RootedTree::from_edges(4, 0, {{0, 1}, {2, 3}}); }) ==
          Errc::disconnected_node);
  REQUIRE(code_of([] { RootedTree::from_edges(3, 0, {{0, 1}, {0, 9}}); }) == Errc::invalid_node_id);
}

TEST_CASE("euler intervals agree with parent-chain ancestry") {
  SplitMix64 rng(414);
  for (int rep = 0; rep < 20; ++rep) {
    RootedTree t = sample_galton_watson(OffspringDistribution::poisson(2.0), 60, rng.next_u64());
    for (int a = 0; a < t.node_count(); a += 7)
      for (int b = 0; b < t.node_count(); b += 3) {
        bool walk = false;
        for (int v = b; t.has_parent(v);) {
          v = t.parent(v);
          if (v == a) {
            walk = true;
            break;
          }
        }
        REQUIRE(t.is_ancestor(a, b) == walk);
      }
    // strict descendant count from the walk, preorder parent-before-child
    std::vector<int> brute(static_cast<std::size_t>(t.node_count()), 0);
    for (int v = 0; v < t.node_count(); ++v)
      for (int a = v; t.has_parent(a);) {
        a = t.parent(a);
        ++brute[static_cast<std::size_t>(a)];
      }
    for (int v = 0; v < t.node_count(); ++v)
      REQUIRE(t.desc_count(v) == brute[static_cast<std::size_t>(v)]);
    std::vector<char> seen(static_cast<std::size_t>(t.node_count()), 0);
    for (int v : t.preorder()) {
      if (t.has_parent(v)) REQUIRE(seen[static_cast<std::size_t>(t.parent(v))] == 1);
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
}

TEST_CASE("rerooting keeps ids and the undirected edge set") {
  RootedTree t = testutil::bench_tree();
  RootedTree r = t.rerooted(5);
  REQUIRE(r.root() == 5);
  REQUIRE(r.depth(5) == 0);
  REQUIRE(r.node_count() == t.node_count());
  REQUIRE(undirected_edges(r) == undirected_edges(t));
  REQUIRE(r.parent(2) == 5);
  REQUIRE(r.parent(1) == 2);
  REQUIRE(r.depth(8) == 5);
  RootedTree back = r.rerooted(0);
  REQUIRE(back.same_structure(t));
  REQUIRE(t.rerooted(0).same_structure(t));
}

TEST_CASE("tree serialization round trip") {
  REQUIRE(format_tree(testutil::path_tree(3)) == "3 0\n1 0\n2 1\n");
  RootedTree t = testutil::bench_tree();
  REQUIRE(parse_tree(format_tree(t)).same_structure(t));
  RootedTree r = t.rerooted(4);
  REQUIRE(parse_tree(format_tree(r)).same_structure(r));
}

TEST_CASE("tree parsing errors") {
  REQUIRE(code_of([] { parse_tree("what"); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_tree(""); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_tree("3 0\n1 0\n"); }) == Errc::disconnected_node);
  REQUIRE(code_of([] { parse_tree("3 0\n1 0\n2 9\n"); }) == Errc::invalid_node_id);
  REQUIRE(code_of([] { parse_tree("3 0\n1 0\n1 0\n"); }) == Errc::io_failure);
  REQUIRE(code_of([] { parse_tree("2 0\n0 1\n"); }) == Errc::io_failure);
}

TEST_CASE("deepest ancestor within a set") {
  RootedTree t = testutil::bench_tree();
  std::vector<int> s{1, 3};
  REQUIRE(deepest_ancestor_in(t, 8, s) == 3);
  REQUIRE(deepest_ancestor_in(t, 4, s) == 1);
  REQUIRE(deepest_ancestor_in(t, 1, s) == std::nullopt);
  REQUIRE(deepest_ancestor_in(t, 0, s) == std::nullopt);
}

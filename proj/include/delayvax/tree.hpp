#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "delayvax/errors.hpp"

namespace delayvax {

// Immutable rooted tree over dense node ids 0..n-1.
//
// Subtree queries run in O(1) via preorder (Euler) intervals:
//   b is a strict descendant of a  <=>  ein[a] < ein[b] && eout[b] <= eout[a]
// where [ein[v], eout[v]) spans v's subtree in preorder numbering.
class RootedTree {
 public:
  static RootedTree from_parents(const std::vector<std::optional<int>>& parents) {
    int n = static_cast<int>(parents.size());
    if (n == 0) fail(Errc::invalid_node_id, "empty parent list");
    int root = -1;
    std::vector<int> roots;
    for (int v = 0; v < n; ++v) {
      if (!parents[v].has_value()) {
        roots.push_back(v);
        continue;
      }
      int p = *parents[v];
      if (p < 0 || p >= n)
        fail(Errc::invalid_node_id,
             "node " + std::to_string(v) + " references parent " + std::to_string(p) +
                 " outside 0.." + std::to_string(n - 1));
      if (p == v) fail(Errc::cycle_detected, "node " + std::to_string(v) + " is its own parent");
    }
    if (roots.size() > 1) {
      std::string ids;
      for (int r : roots) ids += (ids.empty() ? "" : ",") + std::to_string(r);
      fail(Errc::multiple_roots, "nodes {" + ids + "} all lack a parent");
    }
    if (roots.empty())
      fail(Errc::cycle_detected, "every node has a parent; the structure contains a cycle");
    root = roots[0];

    RootedTree t;
    t.root_ = root;
    t.parent_.assign(n, -1);
    t.children_.assign(n, {});
    for (int v = 0; v < n; ++v) {
      if (v == root) continue;
      t.parent_[v] = *parents[v];
      t.children_[*parents[v]].push_back(v);
    }
    t.finish_build();
    return t;
  }

  // Undirected edge list -> tree rooted at `root`. Used by the deserializer
  // and by rerooting.
  static RootedTree from_edges(int n, int root, const std::vector<std::pair<int, int>>& edges) {
    if (n < 1) fail(Errc::invalid_node_id, "node count must be >= 1");
    if (root < 0 || root >= n) fail(Errc::invalid_node_id, "root " + std::to_string(root));
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) {
      if (a < 0 || a >= n || b < 0 || b >= n)
        fail(Errc::invalid_node_id,
             "edge (" + std::to_string(a) + "," + std::to_string(b) + ") outside 0.." +
                 std::to_string(n - 1));
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    RootedTree t;
    t.root_ = root;
    t.parent_.assign(n, -1);
    t.children_.assign(n, {});
    std::vector<int> order{root};
    std::vector<char> seen(n, 0);
    seen[root] = 1;
    order.reserve(n);
    for (std::size_t i = 0; i < order.size(); ++i) {
      int v = order[i];
      for (int w : adj[v]) {
        if (seen[w]) {
          if (w != t.parent_[v])
            fail(Errc::cycle_detected, "edge (" + std::to_string(v) + "," + std::to_string(w) +
                                           ") closes a cycle");
          continue;
        }
        seen[w] = 1;
        t.parent_[w] = v;
        t.children_[v].push_back(w);
        order.push_back(w);
      }
    }
    for (int v = 0; v < n; ++v)
      if (!seen[v])
        fail(Errc::disconnected_node, "node " + std::to_string(v) + " is unreachable from root");
    for (auto& cs : t.children_) std::sort(cs.begin(), cs.end());
    t.finish_build();
    return t;
  }

  int node_count() const { return static_cast<int>(parent_.size()); }
  int root() const { return root_; }

  bool has_parent(int v) const { return parent_[check(v)] >= 0; }
  int parent(int v) const { return parent_[check(v)]; }  // -1 for the root
  const std::vector<int>& children(int v) const { return children_[check(v)]; }

  int depth(int v) const { return depth_[check(v)]; }
  int desc_count(int v) const { return eout_[check(v)] - ein_[check(v)] - 1; }
  int euler_in(int v) const { return ein_[check(v)]; }
  int euler_out(int v) const { return eout_[check(v)]; }

  // Preorder over nodes; every node appears after its parent. This is the
  // canonical traversal order for deterministic per-edge draws.
  const std::vector<int>& preorder() const { return preorder_; }

  // Strict ancestry: a node is not its own ancestor.
  bool is_ancestor(int a, int b) const {
    check(a);
    check(b);
    return ein_[a] < ein_[b] && eout_[b] <= eout_[a];
  }

  RootedTree rerooted(int new_root) const {
    check(new_root);
    if (new_root == root_) return *this;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(parent_.size() - 1);
    for (int v = 0; v < node_count(); ++v)
      if (v != root_) edges.emplace_back(v, parent_[v]);
    return from_edges(node_count(), new_root, edges);
  }

  bool same_structure(const RootedTree& other) const {
    return root_ == other.root_ && parent_ == other.parent_;
  }

 private:
  RootedTree() = default;

  int check(int v) const {
    if (v < 0 || v >= node_count())
      fail(Errc::invalid_node_id, "node " + std::to_string(v) + " outside 0.." +
                                      std::to_string(node_count() - 1));
    return v;
  }

  // Depth, preorder and Euler intervals; also detects cycles left by
  // from_parents (unreachable nodes under a valid single root).
  void finish_build() {
    int n = node_count();
    depth_.assign(n, 0);
    ein_.assign(n, 0);
    eout_.assign(n, 0);
    preorder_.clear();
    preorder_.reserve(n);

    int timer = 0;
    std::vector<std::pair<int, std::size_t>> stack;  // (node, next child index)
    stack.emplace_back(root_, 0);
    ein_[root_] = timer++;
    preorder_.push_back(root_);
    while (!stack.empty()) {
      auto& [v, ci] = stack.back();
      if (ci < children_[v].size()) {
        int c = children_[v][ci++];
        depth_[c] = depth_[v] + 1;
        ein_[c] = timer++;
        preorder_.push_back(c);
        stack.emplace_back(c, 0);
      } else {
        eout_[v] = timer;
        stack.pop_back();
      }
    }
    if (static_cast<int>(preorder_.size()) != n) {
      std::vector<char> reached(n, 0);
      for (int v : preorder_) reached[v] = 1;
      std::string ids;
      for (int v = 0; v < n && ids.size() < 64; ++v)
        if (!reached[v]) ids += (ids.empty() ? "" : ",") + std::to_string(v);
      fail(Errc::cycle_detected, "nodes {" + ids + "} are not reachable from the root");
    }
  }

  int root_ = 0;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> depth_, ein_, eout_, preorder_;
};

// Deepest member of S that is a strict ancestor of u, if any. Ancestors of u
// form a chain, so the maximizer is unique.
inline std::optional<int> deepest_ancestor_in(const RootedTree& t, int u,
                                              const std::vector<int>& s) {
  std::optional<int> best;
  for (int v : s) {
    if (t.is_ancestor(v, u) && (!best || t.depth(v) > t.depth(*best))) best = v;
  }
  return best;
}

// --- line-oriented tree format -------------------------------------------
//
//   n root_id
//   child_id parent_id     (one line per edge, child ids ascending)

inline std::string format_tree(const RootedTree& t) {
  std::string out = std::to_string(t.node_count()) + " " + std::to_string(t.root()) + "\n";
  for (int v = 0; v < t.node_count(); ++v)
    if (v != t.root()) out += std::to_string(v) + " " + std::to_string(t.parent(v)) + "\n";
  return out;
}

inline RootedTree parse_tree(std::string_view text) {
  std::istringstream in{std::string(text)};
  long long n = 0, root = 0;
  if (!(in >> n >> root)) fail(Errc::io_failure, "tree header must be `n root_id`");
  if (n < 1) fail(Errc::io_failure, "tree node count must be >= 1");
  std::vector<std::optional<int>> parents(static_cast<std::size_t>(n));
  std::vector<char> assigned(static_cast<std::size_t>(n), 0);
  long long c = 0, p = 0;
  long long edges = 0;
  while (in >> c >> p) {
    if (c < 0 || c >= n || p < 0 || p >= n)
      fail(Errc::invalid_node_id, "edge (" + std::to_string(c) + "," + std::to_string(p) +
                                      ") outside 0.." + std::to_string(n - 1));
    if (assigned[static_cast<std::size_t>(c)])
      fail(Errc::io_failure, "node " + std::to_string(c) + " listed as a child twice");
    assigned[static_cast<std::size_t>(c)] = 1;
    parents[static_cast<std::size_t>(c)] = static_cast<int>(p);
    ++edges;
  }
  if (!in.eof() && in.fail()) fail(Errc::io_failure, "malformed edge line in tree file");
  if (root < 0 || root >= n) fail(Errc::invalid_node_id, "root " + std::to_string(root));
  if (assigned[static_cast<std::size_t>(root)])
    fail(Errc::io_failure, "root " + std::to_string(root) + " listed as a child");
  if (edges != n - 1) {
    std::string ids;
    for (long long v = 0; v < n && ids.size() < 64; ++v)
      if (v != root && !assigned[static_cast<std::size_t>(v)])
        ids += (ids.empty() ? "" : ",") + std::to_string(v);
    fail(Errc::disconnected_node, "expected " + std::to_string(n - 1) + " edges, got " +
                                      std::to_string(edges) + "; nodes {" + ids +
                                      "} have no parent");
  }
  return RootedTree::from_parents(parents);
}

}  // namespace delayvax

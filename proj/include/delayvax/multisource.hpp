#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "delayvax/errors.hpp"
#include "delayvax/planner.hpp"
#include "delayvax/reward.hpp"
#include "delayvax/tree.hpp"

namespace delayvax {

// An epidemic snapshot: one tree, a non-empty set of already-infected nodes.
// Nodes outside `sources` are healthy. `sources` is kept sorted and unique.
struct MultiSourceInstance {
  RootedTree tree;
  std::vector<int> sources;

  static MultiSourceInstance make(RootedTree tree, std::vector<int> sources) {
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    if (sources.empty()) fail(Errc::config_invalid, "at least one source is required");
    for (int s : sources)
      if (s < 0 || s >= tree.node_count())
        fail(Errc::invalid_node_id, "source " + std::to_string(s) + " outside tree");
    return {std::move(tree), std::move(sources)};
  }

  bool is_source(int v) const {
    return std::binary_search(sources.begin(), sources.end(), v);
  }
};

// Reroots the instance at the smallest source id unless the root is already
// a source. Node ids are unchanged by rerooting.
inline MultiSourceInstance normalize_root(const MultiSourceInstance& inst) {
  if (inst.is_source(inst.tree.root())) return inst;
  return {inst.tree.rerooted(inst.sources.front()), inst.sources};
}

// True when the sources induce a connected subtree containing the root.
inline bool sources_connected(const MultiSourceInstance& inst) {
  if (!inst.is_source(inst.tree.root())) return false;
  for (int s : inst.sources)
    if (s != inst.tree.root() && !inst.is_source(inst.tree.parent(s))) return false;
  return true;
}

// A single-source piece of a larger instance: a rooted tree in a local dense
// id space whose root is the source, plus the local -> original id map.
struct SingleSourceComponent {
  RootedTree tree;
  std::vector<int> orig_id;

  int source() const { return orig_id[tree.root()]; }
};

namespace detail {

// Builds a component tree over `members` (original ids, must include
// `source` and be closed under parents up to it). Local ids are assigned in
// ascending original-id order.
inline SingleSourceComponent build_component(const RootedTree& t, std::vector<int> members,
                                             int source) {
  std::sort(members.begin(), members.end());
  std::vector<int> loc(t.node_count(), -1);
  for (std::size_t i = 0; i < members.size(); ++i) loc[members[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(members.size() - 1);
  for (int x : members)
    if (x != source) edges.emplace_back(loc[t.parent(x)], loc[x]);
  return {RootedTree::from_edges(static_cast<int>(members.size()), loc[source], edges),
          std::move(members)};
}

}  // namespace detail

// Deletes the (source, source) edges of a connected infected subtree and
// returns one single-source instance per source that still has healthy
// subtrees hanging off it, ordered by source id. Sources with no healthy
// neighbors are dropped, so an all-infected instance yields an empty list.
inline std::vector<SingleSourceComponent> split_connected_sources(const MultiSourceInstance& inst) {
  const RootedTree& t = inst.tree;
  if (!inst.is_source(t.root())) fail(Errc::root_not_source, "root is not a source");
  if (!sources_connected(inst))
    fail(Errc::sources_not_connected, "sources do not form a connected subtree");

  std::vector<SingleSourceComponent> out;
  for (int s : inst.sources) {
    std::vector<int> members{s};
    for (int c : t.children(s)) {
      if (inst.is_source(c)) continue;
      // a healthy child's whole subtree is healthy, else the sources would
      // be disconnected
      for (int e = t.euler_in(c); e < t.euler_out(c); ++e) members.push_back(t.preorder()[e]);
    }
    if (members.size() > 1) out.push_back(detail::build_component(t, std::move(members), s));
  }
  return out;
}

// A healthy fragment reachable source-free from two or more sources, with
// the fragment re-rooted once per adjacent source. Local ids index
// `node_ids` (ascending original ids). parent_from[s][v] is v's neighbor
// toward source s (-1 when that neighbor is the source itself) and
// depth_from[s][v] the edge distance from the source. joint_desc[v] lists
// the locals that lie in v's subtree in every per-source rooting.
struct ResidualComponent {
  std::vector<int> node_ids;
  std::vector<int> source_ids;
  std::vector<std::vector<int>> parent_from;
  std::vector<std::vector<int>> depth_from;
  std::vector<std::vector<int>> joint_desc;

  int size() const { return static_cast<int>(node_ids.size()); }
};

// Assembles a ResidualComponent from a fragment of `t` and its adjacent
// sources. The fragment must be connected and every source edge-adjacent to
// it; violations raise InconsistentUniverse.
inline ResidualComponent build_residual(const RootedTree& t, std::vector<int> fragment,
                                        std::vector<int> sources) {
  std::sort(fragment.begin(), fragment.end());
  fragment.erase(std::unique(fragment.begin(), fragment.end()), fragment.end());
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  if (fragment.empty() || sources.empty())
    fail(Errc::inconsistent_universe, "residual needs a fragment and at least one source");
  const int f = static_cast<int>(fragment.size());

  std::vector<int> loc(t.node_count(), -1);
  for (int i = 0; i < f; ++i) {
    int v = fragment[i];
    if (v < 0 || v >= t.node_count()) fail(Errc::invalid_node_id, "fragment node outside tree");
    loc[v] = i;
  }
  for (int s : sources) {
    if (s < 0 || s >= t.node_count()) fail(Errc::invalid_node_id, "source outside tree");
    if (loc[s] >= 0) fail(Errc::inconsistent_universe, "source listed inside the fragment");
  }

  auto neighbors = [&](int v) {
    std::vector<int> out;
    if (v != t.root()) out.push_back(t.parent(v));
    for (int c : t.children(v)) out.push_back(c);
    return out;
  };

  ResidualComponent res;
  res.node_ids = fragment;
  res.source_ids = sources;
  const int m = static_cast<int>(sources.size());
  res.parent_from.assign(m, std::vector<int>(f, -2));
  res.depth_from.assign(m, std::vector<int>(f, 0));

  for (int si = 0; si < m; ++si) {
    auto& par = res.parent_from[si];
    auto& dep = res.depth_from[si];
    std::vector<int> queue;
    for (int c : neighbors(sources[si]))
      if (loc[c] >= 0) {
        par[loc[c]] = -1;
        dep[loc[c]] = 1;
        queue.push_back(loc[c]);
      }
    if (queue.empty())
      fail(Errc::inconsistent_universe,
           "source " + std::to_string(sources[si]) + " is not adjacent to the fragment");
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int v = queue[h];
      for (int w : neighbors(fragment[v])) {
        int lw = loc[w];
        if (lw < 0 || par[lw] != -2) continue;
        par[lw] = v;
        dep[lw] = dep[v] + 1;
        queue.push_back(lw);
      }
    }
    if (static_cast<int>(queue.size()) != f)
      fail(Errc::inconsistent_universe, "fragment is not connected");
  }

  // descendant memberships per rooting, then their intersection
  std::vector<int> in_all(static_cast<std::size_t>(f) * f, 0);
  for (int si = 0; si < m; ++si) {
    const auto& par = res.parent_from[si];
    for (int j = 0; j < f; ++j)
      for (int a = par[j]; a >= 0; a = par[a]) ++in_all[static_cast<std::size_t>(a) * f + j];
  }
  res.joint_desc.assign(f, {});
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < f; ++j)
      if (in_all[static_cast<std::size_t>(i) * f + j] == m) res.joint_desc[i].push_back(j);
  return res;
}

struct Decomposition {
  std::vector<SingleSourceComponent> single_source_trees;
  std::vector<ResidualComponent> residual_trees;
  std::vector<std::string> notes;
};

// Peels off, per source, the branches that contain no other source; the
// remaining healthy nodes are exactly those reachable source-free from two
// or more sources and are grouped into residual fragments. Every healthy
// node lands in exactly one component.
inline Decomposition decompose_distant_sources(const MultiSourceInstance& inst) {
  const RootedTree& t = inst.tree;
  if (!inst.is_source(t.root())) fail(Errc::root_not_source, "root is not a source");
  const int n = t.node_count();

  std::vector<int> src_below(n, 0);  // sources in subtree, inclusive
  const auto& pre = t.preorder();
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
    int v = *it;
    if (inst.is_source(v)) ++src_below[v];
    for (int c : t.children(v)) src_below[v] += src_below[c];
  }

  std::vector<int> order = inst.sources;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (t.depth(a) != t.depth(b)) return t.depth(a) < t.depth(b);
    return a < b;
  });

  Decomposition out;
  std::vector<char> extracted(n, 0);
  for (int s : order) {
    std::vector<int> members{s};
    for (int c : t.children(s)) {
      if (src_below[c] > 0) continue;
      for (int e = t.euler_in(c); e < t.euler_out(c); ++e) {
        members.push_back(pre[e]);
        extracted[pre[e]] = 1;
      }
    }
    if (members.size() > 1)
      out.single_source_trees.push_back(detail::build_component(t, std::move(members), s));
  }

  // leftover healthy nodes, grouped into connected fragments
  std::vector<int> frag_of(n, -1);
  std::vector<std::vector<int>> fragments;
  for (int v : pre) {
    if (inst.is_source(v) || extracted[v]) continue;
    int p = v == t.root() ? -1 : t.parent(v);
    if (p >= 0 && frag_of[p] >= 0) {
      frag_of[v] = frag_of[p];
      fragments[frag_of[v]].push_back(v);
    } else {
      frag_of[v] = static_cast<int>(fragments.size());
      fragments.push_back({v});
    }
  }

  for (auto& frag : fragments) {
    std::vector<int> adj;
    for (int v : frag) {
      if (v != t.root() && inst.is_source(t.parent(v))) adj.push_back(t.parent(v));
      for (int c : t.children(v))
        if (inst.is_source(c)) adj.push_back(c);
    }
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    if (adj.size() < 2)
      fail(Errc::inconsistent_universe, "leftover fragment touches fewer than two sources");
    if (adj.size() >= 3)
      out.notes.push_back("residual fragment around node " +
                          std::to_string(*std::min_element(frag.begin(), frag.end())) +
                          " is shared by " + std::to_string(adj.size()) +
                          " sources; planned heuristically");
    out.residual_trees.push_back(build_residual(t, std::move(frag), std::move(adj)));
  }
  std::sort(out.residual_trees.begin(), out.residual_trees.end(),
            [](const ResidualComponent& a, const ResidualComponent& b) {
              return a.node_ids.front() < b.node_ids.front();
            });
  return out;
}

namespace detail {

// Residual reward in local id space: each member contributes the size of its
// joint subtree minus the joint subtrees of deeper members inside it, scaled
// by the probability of surviving the race from every adjacent source.
inline double residual_reward_local(const ResidualComponent& res, const std::vector<int>& s,
                                    const DelayModel& m) {
  const int f = res.size();
  std::vector<char> in_union(f, 0);
  double total = 0.0;
  for (int i : s) {
    std::fill(in_union.begin(), in_union.end(), 0);
    for (int j : s) {
      if (j == i || !std::binary_search(res.joint_desc[i].begin(), res.joint_desc[i].end(), j))
        continue;
      for (int x : res.joint_desc[j]) in_union[x] = 1;
    }
    long long count = 0;
    for (int x : res.joint_desc[i])
      if (!in_union[x]) ++count;
    double p = 1.0;
    for (std::size_t si = 0; si < res.source_ids.size(); ++si)
      p *= survival_prob(m, res.depth_from[si][i]);
    total += static_cast<double>(count) * p;
  }
  return total;
}

}  // namespace detail

// Expected number of saved nodes inside a residual fragment for plan `s`
// (original ids). Planting on a replicated source raises SourceInPlan; ids
// outside the fragment raise InconsistentUniverse.
inline double multisource_reward(const ResidualComponent& res, const std::vector<int>& s,
                                 const DelayModel& m) {
  std::vector<int> local;
  local.reserve(s.size());
  for (int v : s) {
    auto it = std::lower_bound(res.node_ids.begin(), res.node_ids.end(), v);
    if (it == res.node_ids.end() || *it != v) {
      if (std::binary_search(res.source_ids.begin(), res.source_ids.end(), v))
        fail(Errc::source_in_plan, "node " + std::to_string(v) + " is an infected source");
      fail(Errc::inconsistent_universe,
           "node " + std::to_string(v) + " is not part of the fragment");
    }
    local.push_back(static_cast<int>(it - res.node_ids.begin()));
  }
  std::sort(local.begin(), local.end());
  local.erase(std::unique(local.begin(), local.end()), local.end());
  return detail::residual_reward_local(res, local, m);
}

// Greedy planning on an arbitrary snapshot. The instance is normalized so a
// source is the root; a connected infected subtree is split into independent
// single-source trees (exact objective), while scattered sources are
// decomposed into single-source trees plus residual fragments. One candidate
// per component is maintained and the best marginal gain is admitted each
// round; ties fall to the earlier component, then the smaller node id.
// Returned node ids and tree_of indices refer to the original instance and
// the component order (single-source trees first, then residuals).
inline VaccinationPlan plan_multisource(const MultiSourceInstance& raw, int k,
                                        const DelayModel& m, unsigned threads = 1) {
  MultiSourceInstance inst = normalize_root(raw);
  detail::check_budget(k, inst.tree.node_count() - static_cast<int>(inst.sources.size()));

  if (sources_connected(inst)) {
    auto comps = split_connected_sources(inst);
    std::vector<RootedTree> forest;
    forest.reserve(comps.size());
    for (const auto& c : comps) forest.push_back(c.tree);
    VaccinationPlan plan = forest_greedy(forest, k, m, threads);
    for (std::size_t i = 0; i < plan.nodes.size(); ++i)
      plan.nodes[i] = comps[plan.tree_of[i]].orig_id[plan.nodes[i]];
    return plan;
  }

  Decomposition d = decompose_distant_sources(inst);
  const std::size_t n_single = d.single_source_trees.size();
  const std::size_t n_comp = n_single + d.residual_trees.size();

  std::vector<std::vector<int>> sets(n_comp);  // local ids per component
  struct Best {
    int node = -1;
    double gain = -std::numeric_limits<double>::infinity();
  };
  std::vector<Best> best(n_comp);

  auto refresh = [&](std::size_t ci) {
    Best b;
    if (ci < n_single) {
      const RootedTree& t = d.single_source_trees[ci].tree;
      auto sweep = detail::sweep_members(t, sets[ci]);
      std::vector<char> in_set(t.node_count(), 0);
      for (int v : sets[ci]) in_set[v] = 1;
      std::vector<double> gain(t.node_count());
      parallel_for(t.node_count(), threads, [&](std::size_t v) {
        int u = static_cast<int>(v);
        gain[v] = (u == t.root() || in_set[v])
                      ? -std::numeric_limits<double>::infinity()
                      : detail::gain_with_sweep(t, sweep, u, m);
      });
      for (int v = 0; v < t.node_count(); ++v)
        if (gain[v] > b.gain) {
          b.gain = gain[v];
          b.node = v;
        }
    } else {
      const ResidualComponent& res = d.residual_trees[ci - n_single];
      std::vector<char> in_set(res.size(), 0);
      for (int v : sets[ci]) in_set[v] = 1;
      double base = detail::residual_reward_local(res, sets[ci], m);
      for (int v = 0; v < res.size(); ++v) {
        if (in_set[v]) continue;
        std::vector<int> grown = sets[ci];
        grown.insert(std::lower_bound(grown.begin(), grown.end(), v), v);
        double g = detail::residual_reward_local(res, grown, m) - base;
        if (g > b.gain) {
          b.gain = g;
          b.node = v;
        }
      }
    }
    best[ci] = b;
  };
  for (std::size_t ci = 0; ci < n_comp; ++ci) refresh(ci);

  VaccinationPlan plan;
  for (int step = 0; step < k; ++step) {
    std::size_t win = n_comp;
    for (std::size_t ci = 0; ci < n_comp; ++ci) {
      if (best[ci].node < 0) continue;
      if (win == n_comp || best[ci].gain > best[win].gain) win = ci;
    }
    int node = best[win].node;
    plan.nodes.push_back(win < n_single ? d.single_source_trees[win].orig_id[node]
                                        : d.residual_trees[win - n_single].node_ids[node]);
    plan.gains.push_back(best[win].gain);
    plan.tree_of.push_back(static_cast<int>(win));
    auto& set = sets[win];
    set.insert(std::lower_bound(set.begin(), set.end(), node), node);
    refresh(win);
  }
  if (!d.residual_trees.empty())
    plan.notes.push_back(
        "instance has residual fragments shared by several sources; selections inside them "
        "optimize the exclusive-intersection objective and carry no approximation guarantee");
  for (auto& n : d.notes) plan.notes.push_back(std::move(n));
  return plan;
}

// Stable text report of a decomposition, original ids throughout.
inline std::string format_decomposition(const Decomposition& d) {
  std::string out;
  out += "single_source_trees " + std::to_string(d.single_source_trees.size()) + "\n";
  for (std::size_t i = 0; i < d.single_source_trees.size(); ++i) {
    const auto& c = d.single_source_trees[i];
    out += "tree " + std::to_string(i) + " source " + std::to_string(c.source()) + " nodes";
    for (int v : c.orig_id)
      if (v != c.source()) out += " " + std::to_string(v);
    out += "\n";
  }
  out += "residual_trees " + std::to_string(d.residual_trees.size()) + "\n";
  for (std::size_t i = 0; i < d.residual_trees.size(); ++i) {
    const auto& r = d.residual_trees[i];
    out += "residual " + std::to_string(i) + " sources";
    for (int s : r.source_ids) out += " " + std::to_string(s);
    out += " nodes";
    for (int v : r.node_ids) out += " " + std::to_string(v);
    out += "\n";
  }
  for (const auto& n : d.notes) out += "note " + n + "\n";
  return out;
}

}  // namespace delayvax

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "delayvax/delay.hpp"
#include "delayvax/errors.hpp"
#include "delayvax/tree.hpp"

namespace delayvax {

namespace detail {

// Dense bitset over node ids, one row per node, row v = descendants of v
// (inclusive of v itself only in the helper's scratch; exposed rows are the
// proper-descendant sets).
class DescMasks {
 public:
  explicit DescMasks(const RootedTree& t)
      : n_(t.node_count()), words_((n_ + 63) / 64), bits_(static_cast<std::size_t>(n_) * words_) {
    // children before parents: reverse preorder is a valid post-order here
    const auto& pre = t.preorder();
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
      int v = *it;
      std::uint64_t* row = row_ptr(v);
      for (int c : t.children(v)) {
        const std::uint64_t* crow = row_ptr(c);
        for (int w = 0; w < words_; ++w) row[w] |= crow[w];
        row[c / 64] |= 1ull << (c % 64);
      }
    }
  }

  const std::uint64_t* row(int v) const { return bits_.data() + static_cast<std::size_t>(v) * words_; }
  int words() const { return words_; }

  bool contains(int v, int u) const { return (row(v)[u / 64] >> (u % 64)) & 1u; }

 private:
  std::uint64_t* row_ptr(int v) { return bits_.data() + static_cast<std::size_t>(v) * words_; }
  int n_;
  int words_;
  std::vector<std::uint64_t> bits_;
};

}  // namespace detail

// Expected reward computed the literal way: materialize every member's
// descendant set as a bitset, build the union over the member's selected
// descendants with bitwise ops, and count the difference. Shares nothing
// with the exclusive-count sweep, so the two paths check each other.
inline double exhaustive_reward_check(const RootedTree& t, const std::vector<int>& s,
                                      const DelayModel& m) {
  std::vector<int> members = detail::check_plan_set(t, s);
  detail::DescMasks masks(t);
  const int words = masks.words();
  std::vector<std::uint64_t> uni(words);
  double total = 0.0;
  for (int i : members) {
    std::fill(uni.begin(), uni.end(), 0ull);
    // union of the descendant sets only; a member below i with nothing
    // selected above it inside i's subtree stays counted
    for (int j : members)
      if (j != i && masks.contains(i, j)) {
        const std::uint64_t* rj = masks.row(j);
        for (int w = 0; w < words; ++w) uni[w] |= rj[w];
      }
    long long count = 0;
    const std::uint64_t* ri = masks.row(i);
    for (int w = 0; w < words; ++w) count += std::popcount(ri[w] & ~uni[w]);
    total += static_cast<double>(count) * survival_prob(m, t.depth(i));
  }
  return total;
}

struct OracleResult {
  std::vector<int> best_set;  // ascending node ids
  double best_value = 0.0;
  long long evaluated = 0;  // subsets scored
};

inline constexpr long long kDefaultOracleCap = 10'000'000;

// Scores every k-subset of non-root nodes and returns the best; ties keep
// the lexicographically smallest id set (enumeration order is lexicographic
// over ascending ids, and only strict improvements replace the incumbent).
inline OracleResult exhaustive_optimum(const RootedTree& t, int k, const DelayModel& m,
                                       long long cap = kDefaultOracleCap) {
  const int n_cand = t.node_count() - 1;
  if (k < 1 || k > n_cand)
    fail(Errc::budget_exceeds_candidates,
         "budget " + std::to_string(k) + " outside [1, " + std::to_string(n_cand) + "]");

  long long total = 1;
  for (int i = 0; i < k; ++i) {
    total = total * (n_cand - i) / (i + 1);
    if (total > cap)
      fail(Errc::search_space_too_large, "subset count exceeds cap " + std::to_string(cap));
  }

  std::vector<int> cand;
  for (int v = 0; v < t.node_count(); ++v)
    if (v != t.root()) cand.push_back(v);

  detail::DescMasks masks(t);
  const int words = masks.words();
  std::vector<double> surv(t.node_count());
  for (int v = 0; v < t.node_count(); ++v) surv[v] = survival_prob(m, t.depth(v));

  std::vector<std::uint64_t> uni(words);
  auto score = [&](const std::vector<int>& idx) {
    double total_r = 0.0;
    for (int a = 0; a < k; ++a) {
      int i = cand[idx[a]];
      std::fill(uni.begin(), uni.end(), 0ull);
      for (int b = 0; b < k; ++b) {
        int j = cand[idx[b]];
        if (j != i && masks.contains(i, j)) {
          const std::uint64_t* rj = masks.row(j);
          for (int w = 0; w < words; ++w) uni[w] |= rj[w];
        }
      }
      long long count = 0;
      const std::uint64_t* ri = masks.row(i);
      for (int w = 0; w < words; ++w) count += std::popcount(ri[w] & ~uni[w]);
      total_r += static_cast<double>(count) * surv[i];
    }
    return total_r;
  };

  OracleResult out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    double v = score(idx);
    ++out.evaluated;
    if (out.best_set.empty() || v > out.best_value) {
      out.best_value = v;
      out.best_set.clear();
      for (int i : idx) out.best_set.push_back(cand[i]);
    }
    // next combination in lexicographic order
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n_cand - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

}  // namespace delayvax

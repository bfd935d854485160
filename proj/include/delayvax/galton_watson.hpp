#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delayvax/errors.hpp"
#include "delayvax/random.hpp"
#include "delayvax/tree.hpp"

namespace delayvax {

// Offspring distribution eta for the branching process.
struct OffspringDistribution {
  enum class Kind { poisson, discrete_uniform, binary_mix };

  Kind kind = Kind::binary_mix;
  double poisson_mean = 0.0;
  int uniform_mean = 0;  // support {0, ..., 2*mean}, equal mass

  static OffspringDistribution poisson(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("poisson mean must be > 0");
    OffspringDistribution d;
    d.kind = Kind::poisson;
    d.poisson_mean = mean;
    return d;
  }

  static OffspringDistribution discrete_uniform(int mean) {
    if (mean < 1) throw std::invalid_argument("uniform mean must be a positive integer");
    OffspringDistribution d;
    d.kind = Kind::discrete_uniform;
    d.uniform_mean = mean;
    return d;
  }

  // pmf (1/6, 1/6, 4/6) on (0, 1, 2); mean 1.5.
  static OffspringDistribution binary_mix() { return OffspringDistribution{}; }

  double mean() const {
    switch (kind) {
      case Kind::poisson: return poisson_mean;
      case Kind::discrete_uniform: return static_cast<double>(uniform_mean);
      case Kind::binary_mix: return 1.5;
    }
    return 0.0;
  }

  int sample(SplitMix64& rng) const {
    switch (kind) {
      case Kind::poisson: return rng.poisson(poisson_mean);
      case Kind::discrete_uniform:
        return static_cast<int>(rng.uniform_below(2 * static_cast<std::uint64_t>(uniform_mean) + 1));
      case Kind::binary_mix: {
        double u = rng.uniform01();
        if (u < 1.0 / 6.0) return 0;
        if (u < 2.0 / 6.0) return 1;
        return 2;
      }
    }
    return 0;
  }
};

// One generated tree plus what each node drew, for distribution-level checks.
// drawn_eta is empty (nullopt) for nodes that were never expanded because the
// size cap was reached first; truncated marks nodes that could not place all
// of their drawn children.
struct GaltonWatsonTrace {
  RootedTree tree;
  std::vector<std::optional<int>> drawn_eta;
  std::vector<bool> truncated;
  int attempts = 1;
};

inline constexpr std::uint64_t kDefaultGwAttemptCap = 1'000'000;

// Grows a tree breadth-first, one eta draw per expanded node, stopping the
// moment the node count reaches target_size. Extinct attempts (process dies
// before reaching target_size) are discarded and restarted on a fresh
// sub-stream; ids are assigned in generation order with root 0.
inline GaltonWatsonTrace sample_galton_watson_traced(const OffspringDistribution& dist,
                                                     int target_size, std::uint64_t seed,
                                                     std::uint64_t attempt_cap = kDefaultGwAttemptCap) {
  if (target_size < 1) throw std::invalid_argument("target_size must be >= 1");
  for (std::uint64_t attempt = 0; attempt < attempt_cap; ++attempt) {
    SplitMix64 rng = derive_stream(seed, {attempt});
    std::vector<std::optional<int>> parents(1);  // root
    std::vector<std::optional<int>> eta(1);
    std::vector<bool> truncated(1, false);
    int count = 1;
    std::size_t next_expand = 0;
    while (count < target_size && next_expand < parents.size()) {
      int v = static_cast<int>(next_expand++);
      int k = dist.sample(rng);
      eta[v] = k;
      for (int c = 0; c < k; ++c) {
        if (count == target_size) {
          truncated[v] = true;
          break;
        }
        parents.emplace_back(v);
        eta.emplace_back(std::nullopt);
        truncated.push_back(false);
        ++count;
      }
    }
    if (count < target_size) continue;  // extinct, restart
    GaltonWatsonTrace out{RootedTree::from_parents(parents), std::move(eta), std::move(truncated),
                          static_cast<int>(attempt + 1)};
    return out;
  }
  fail(Errc::generation_budget_exceeded,
       "no tree of size " + std::to_string(target_size) + " within " +
           std::to_string(attempt_cap) + " attempts");
}

inline RootedTree sample_galton_watson(const OffspringDistribution& dist, int target_size,
                                       std::uint64_t seed,
                                       std::uint64_t attempt_cap = kDefaultGwAttemptCap) {
  return sample_galton_watson_traced(dist, target_size, seed, attempt_cap).tree;
}

}  // namespace delayvax

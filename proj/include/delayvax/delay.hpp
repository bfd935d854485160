#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "delayvax/random.hpp"

namespace delayvax {

// Infection rate per edge plus the distribution of the immunization time tau.
// tau is a single random variable shared by every vaccinated node.
struct DelayModel {
  enum class TauKind { exponential, deterministic };

  double lambda = 1.0;
  TauKind tau_kind = TauKind::exponential;
  double tau_param = 0.1;  // rate mu, or the fixed time t

  static DelayModel exponential_tau(double lambda, double mu) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
    return {lambda, TauKind::exponential, mu};
  }

  static DelayModel deterministic_tau(double lambda, double t) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
    return {lambda, TauKind::deterministic, t};
  }

  double expected_tau() const {
    return tau_kind == TauKind::exponential ? 1.0 / tau_param : tau_param;
  }

  double sample_tau(SplitMix64& rng) const {
    return tau_kind == TauKind::exponential ? rng.exponential(tau_param) : tau_param;
  }
};

namespace detail {

// Erlang(d, lambda) upper tail: sum_{m=0}^{d-1} e^{-x} x^m / m!  with x = lambda*t.
// Forward compensated summation; switches to log-space once e^{-x} underflows.
inline double erlang_tail(int d, double x) {
  if (x == 0.0) return 1.0;
  if (x <= 700.0) {
    double term = std::exp(-x);
    double sum = 0.0, comp = 0.0;
    for (int m = 0; m < d; ++m) {
      double y = term - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      term *= x / static_cast<double>(m + 1);
    }
    return sum < 1.0 ? sum : 1.0;
  }
  double log_x = std::log(x);
  double max_log = -x;  // m = 0 term; terms grow while m < x, but d << x here
  for (int m = 1; m < d; ++m) {
    double lt = -x + m * log_x - std::lgamma(m + 1.0);
    if (lt > max_log) max_log = lt;
  }
  double acc = 0.0;
  for (int m = 0; m < d; ++m) {
    double lt = -x + m * log_x - std::lgamma(m + 1.0);
    acc += std::exp(lt - max_log);
  }
  double r = std::exp(max_log + std::log(acc));
  return r < 1.0 ? r : 1.0;
}

}  // namespace detail

// P{Z > tau} for a vaccinated node at the given depth, where Z is the sum of
// `depth` i.i.d. Exp(lambda) edge delays.
//
//   exponential tau:   1 - (lambda / (lambda + mu))^depth
//   deterministic t:   Erlang(depth, lambda) tail at t
//
// depth 0 is a source: it is infected at time 0 and returns 0 under every
// model, so spending budget on a source is worth nothing.
inline double survival_prob(const DelayModel& m, int depth) {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  if (depth == 0) return 0.0;
  if (m.tau_kind == DelayModel::TauKind::exponential) {
    double ratio = m.lambda / (m.lambda + m.tau_param);
    return 1.0 - std::pow(ratio, static_cast<double>(depth));
  }
  return detail::erlang_tail(depth, m.lambda * m.tau_param);
}

}  // namespace delayvax

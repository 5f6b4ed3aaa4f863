// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dtameta/math.hpp"

namespace dtameta {

/// Kept draws of one scalar parameter across chains (constrained scale).
struct ScalarChainSet {
  std::vector<std::vector<double>> chains;  // m chains x N draws

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_draws() const { return chains.empty() ? 0 : chains[0].size(); }

  void check(std::size_t min_draws) const {
    if (chains.empty()) throw std::invalid_argument("no chains");
    for (const auto& c : chains) {
      if (c.size() != chains[0].size())
        throw std::invalid_argument("chains differ in length");
    }
    if (n_draws() < min_draws)
      throw std::invalid_argument("need at least " + std::to_string(min_draws) +
                                  " draws per chain");
  }
};

struct DiagnosticValue {
  double value = 0.0;
  bool degenerate = false;
};

namespace diag_detail {

/// True when every draw in every chain is bit-identical (an all-constant
/// series; naive variances can be ~1e-31 instead of 0 from mean rounding).
inline bool all_constant(const ScalarChainSet& s) {
  const double first = s.chains[0][0];
  for (const auto& c : s.chains) {
    for (double x : c) {
      if (x != first) return false;
    }
  }
  return true;
}

}  // namespace diag_detail

/// Split potential scale reduction factor. Each chain is halved; with
/// half-chain length n, B = n var(half means), W = mean(within variances),
/// var+ = ((n-1)/n) W + B/n and Rhat = sqrt(var+/W).
inline DiagnosticValue split_rhat(const ScalarChainSet& s) {
  s.check(4);
  if (diag_detail::all_constant(s)) return {1.0, true};
  const std::size_t n = s.n_draws() / 2;
  std::vector<double> half_means;
  std::vector<double> half_vars;
  for (const auto& chain : s.chains) {
    const std::span<const double> first(chain.data(), n);
    const std::span<const double> second(chain.data() + (chain.size() - n), n);
    for (const auto& half : {first, second}) {
      half_means.push_back(math::mean(half));
      half_vars.push_back(math::variance(half));
    }
  }
  const double w = math::mean(half_vars);
  const double b = static_cast<double>(n) * math::variance(half_means);
  if (w == 0.0) {
    if (b == 0.0) return {1.0, true};
    return {std::numeric_limits<double>::infinity(), false};
  }
  const double var_plus = (static_cast<double>(n) - 1.0) / n * w + b / n;
  return {std::sqrt(var_plus / w), false};
}

namespace diag_detail {

/// Lag-t autocovariance with the same (n-1) denominator as the variance.
inline double autocov(std::span<const double> x, double mean, std::size_t t) {
  double acc = 0.0;
  for (std::size_t i = 0; i + t < x.size(); ++i) acc += (x[i] - mean) * (x[i + t] - mean);
  return acc / (static_cast<double>(x.size()) - 1.0);
}

}  // namespace diag_detail

/// Multi-chain effective sample size mN / (1 + 2 sum rho_t), with the
/// combined autocorrelations truncated by Geyer's initial monotone positive
/// sequence rule.
inline DiagnosticValue ess(const ScalarChainSet& s) {
  s.check(8);
  const std::size_t m = s.n_chains();
  const std::size_t n = s.n_draws();
  const double total = static_cast<double>(m * n);
  if (diag_detail::all_constant(s)) return {total, true};

  std::vector<double> chain_means(m), chain_vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    chain_means[c] = math::mean(s.chains[c]);
    chain_vars[c] = math::variance(s.chains[c]);
  }
  const double w = math::mean(chain_vars);
  double var_plus = (static_cast<double>(n) - 1.0) / n * w;
  if (m > 1) var_plus += math::variance(chain_means);
  if (var_plus == 0.0 || w == 0.0) return {total, true};

  // rho_t = 1 - (W - mean_c acov_t) / var+, paired per Geyer
  const std::size_t max_lag = n - 4;
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0;; ++k) {
    const std::size_t t0 = 2 * k, t1 = 2 * k + 1;
    if (t1 > max_lag) break;
    for (std::size_t t : {t0, t1}) {
      if (t == 0 || rho[t] != 0.0) continue;
      double acc = 0.0;
      for (std::size_t c = 0; c < m; ++c)
        acc += diag_detail::autocov(s.chains[c], chain_means[c], t);
      rho[t] = 1.0 - (w - acc / static_cast<double>(m)) / var_plus;
    }
    double pair = rho[t0] + rho[t1];
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau -= 1.0;  // the pairing double-counts rho_0 = 1
  tau = std::max(tau, 1.0 / 50.0);
  return {total / tau, false};
}

/// Monte Carlo standard error: pooled posterior SD / sqrt(ESS).
inline DiagnosticValue mcse(const ScalarChainSet& s) {
  const DiagnosticValue e = ess(s);
  std::vector<double> pooled;
  pooled.reserve(s.n_chains() * s.n_draws());
  for (const auto& c : s.chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double sd = std::sqrt(math::variance(pooled));
  if (e.degenerate || sd == 0.0) return {0.0, true};
  return {sd / std::sqrt(e.value), false};
}

}  // namespace dtameta

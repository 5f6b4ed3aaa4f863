// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dtameta/diagnostics.hpp"
#include "dtameta/errors.hpp"
#include "dtameta/fit.hpp"
#include "dtameta/math.hpp"

namespace dtameta {

struct WaicResult {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
};

/// WAIC from a (draws x points) pointwise log-likelihood matrix:
/// lppd by log-mean-exp per point, p_waic as the per-point sample variance,
/// and waic = -2 (lppd - p_waic).
inline WaicResult waic(std::span<const double> loglik, std::size_t draws, std::size_t points) {
  if (draws < 2) throw std::invalid_argument("waic needs at least 2 draws");
  if (loglik.size() != draws * points) throw layout_error("waic: matrix shape mismatch");
  WaicResult r;
  std::vector<double> col(draws);
  for (std::size_t j = 0; j < points; ++j) {
    for (std::size_t s = 0; s < draws; ++s) col[s] = loglik[s * points + j];
    r.lppd += math::logsumexp(col) - std::log(static_cast<double>(draws));
    r.p_waic += math::variance(col);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

/// Exact (Clopper-Pearson) binomial confidence interval via inversion of the
/// regularized incomplete beta CDF.
inline std::pair<double, double> exact_ci(int k, int n, double level) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("exact_ci: need 0 <= k <= n, n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("exact_ci: level in (0,1)");
  const double alpha = 1.0 - level;
  const double lo = k == 0 ? 0.0 : math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
  const double hi = k == n ? 1.0 : math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return {lo, hi};
}

struct ParamSummary {
  std::string name;
  std::string role;  // "pooled" or "study"
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double n_eff = 0.0;
  double rhat = 0.0;
  double mcse = 0.0;
  bool degenerate = false;
};

struct FitSummary {
  std::string model;    // "gauss" ... "brma"
  std::string formula;  // "intercept" or "cellmeans:COV"
  std::vector<std::string> cells;
  std::string dataset_name;
  std::string dataset_fingerprint;
  int n_studies = 0;
  ChainConfig config;
  int total_draws = 0;
  int divergences = 0;
  std::vector<ParamSummary> params;
  WaicResult waic{};
};

/// Posterior summaries for every constrained quantity plus WAIC.
inline FitSummary summarize(const FitResult& fit) {
  if (fit.chains.size() < 2) throw layout_error("summarize needs >= 2 chains");
  const auto& names = fit.chains[0].constrained_names;
  for (const auto& c : fit.chains) {
    if (c.constrained_names != names || c.kept != fit.chains[0].kept)
      throw layout_error("chains disagree on constrained layout");
  }

  FitSummary out;
  out.model = fit.spec.model_name();
  out.formula = fit.formula.str();
  out.cells = fit.cells;
  out.dataset_name = fit.data.name;
  out.dataset_fingerprint = fit.data.fingerprint();
  out.n_studies = static_cast<int>(fit.data.size());
  out.config = fit.config;
  out.total_draws = static_cast<int>(fit.chains.size()) * fit.chains[0].kept;
  for (const auto& c : fit.chains) out.divergences += c.divergences;

  const int kept = fit.chains[0].kept;
  for (std::size_t j = 0; j < names.size(); ++j) {
    ParamSummary ps;
    ps.name = names[j];
    ps.role = (names[j].rfind("p1[", 0) == 0 || names[j].rfind("p2[", 0) == 0) ? "study"
                                                                               : "pooled";
    ScalarChainSet set;
    std::vector<double> pooled;
    pooled.reserve(out.total_draws);
    for (const auto& c : fit.chains) {
      std::vector<double> series(kept);
      for (int s = 0; s < kept; ++s) series[s] = c.cdraw(s, j);
      pooled.insert(pooled.end(), series.begin(), series.end());
      set.chains.push_back(std::move(series));
    }
    ps.mean = math::mean(pooled);
    ps.sd = pooled.size() > 1 ? std::sqrt(math::variance(pooled)) : 0.0;
    std::sort(pooled.begin(), pooled.end());
    ps.lower = math::quantile_sorted(pooled, 0.025);
    ps.upper = math::quantile_sorted(pooled, 0.975);
    const auto r = split_rhat(set);
    const auto e = ess(set);
    const auto se = mcse(set);
    ps.rhat = r.value;
    ps.n_eff = e.value;
    ps.mcse = se.value;
    ps.degenerate = r.degenerate || e.degenerate;
    out.params.push_back(std::move(ps));
  }

  // WAIC over all chains' kept draws
  const std::size_t points = static_cast<std::size_t>(fit.chains[0].loglik_cols);
  std::vector<double> ll;
  ll.reserve(static_cast<std::size_t>(out.total_draws) * points);
  for (const auto& c : fit.chains) ll.insert(ll.end(), c.loglik.begin(), c.loglik.end());
  out.waic = waic(ll, static_cast<std::size_t>(out.total_draws), points);
  return out;
}

struct ComparisonRow {
  std::string model;
  std::string parameter;
  double mean, lower, upper, n_eff, rhat;
  double waic;
};

/// Side-by-side comparison of several fits of the same data, sorted by WAIC
/// ascending (stable: ties keep input order). Only pooled parameters appear.
inline std::vector<ComparisonRow> compare(const std::vector<FitSummary>& fits) {
  if (fits.size() < 2) throw std::invalid_argument("compare needs >= 2 fits");
  for (const auto& f : fits) {
    if (f.dataset_fingerprint != fits[0].dataset_fingerprint)
      throw comparability_error("fits were produced from different datasets");
  }
  std::vector<std::size_t> order(fits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fits[a].waic.waic < fits[b].waic.waic;
  });
  std::vector<ComparisonRow> rows;
  for (std::size_t idx : order) {
    const auto& f = fits[idx];
    for (const auto& p : f.params) {
      if (p.role != "pooled") continue;
      rows.push_back({f.model, p.name, p.mean, p.lower, p.upper, p.n_eff, p.rhat, f.waic.waic});
    }
  }
  return rows;
}

}  // namespace dtameta

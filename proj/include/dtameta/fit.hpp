// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/models.hpp"
#include "dtameta/rng.hpp"
#include "dtameta/sampler.hpp"

namespace dtameta {

/// Everything produced by fitting one model to one dataset.
struct FitResult {
  ModelSpec spec;
  ChainConfig config;
  Dataset data;
  Formula formula;
  std::vector<std::string> cells;  // one label per design column
  std::vector<ChainDraws> chains;
  std::vector<std::string> unconstrained_names;

  std::size_t n_reported() const {
    std::size_t k = 0;
    for (std::size_t j = 0; j < chains[0].constrained_names.size(); ++j) {
      const auto& nm = chains[0].constrained_names[j];
      if (nm.rfind("p1[", 0) != 0 && nm.rfind("p2[", 0) != 0) ++k;
    }
    return k;
  }
};

namespace fit_detail {

inline std::vector<std::string> constrained_names(const ModelSpec& spec, std::size_t n_cells,
                                                  std::size_t n_studies) {
  std::vector<std::string> names;
  if (spec.kind == ModelKind::copula) {
    for (std::size_t j = 0; j < n_cells; ++j) names.push_back("MUse[" + std::to_string(j + 1) + "]");
    for (std::size_t j = 0; j < n_cells; ++j) names.push_back("MUsp[" + std::to_string(j + 1) + "]");
    for (std::size_t j = 0; j < n_cells; ++j) names.push_back("ktau[" + std::to_string(j + 1) + "]");
    for (std::size_t j = 0; j < n_cells; ++j) names.push_back("theta[" + std::to_string(j + 1) + "]");
  } else {
    names = {"MU[1]", "MU[2]", "mu[1]", "mu[2]", "rho", "ktau", "sigma[1]", "sigma[2]"};
  }
  for (std::size_t i = 0; i < n_studies; ++i) names.push_back("p1[" + std::to_string(i + 1) + "]");
  for (std::size_t i = 0; i < n_studies; ++i) names.push_back("p2[" + std::to_string(i + 1) + "]");
  return names;
}

/// Constrained view of one unconstrained draw.
///
/// Copula models report the derived means mu (the meta-analytic sensitivity /
/// specificity of a beta margin is alpha/(alpha+beta) = mu, so no latent
/// averaging is involved) and Kendall's tau per design cell.
///
/// BRMA reports the meta-analytic means MU as the per-draw average of n
/// predictive study draws from the fitted bivariate normal, the estimator the
/// reference output uses; its Monte Carlo spread is part of the reported MU
/// intervals, which a deterministic quadrature of the same integral would
/// understate. The predictive deviates come from a dedicated counter-RNG
/// stream so they are reproducible and disjoint from the sampler stream.
inline void constrain_draw(const ModelSpec& spec, const ParamLayout& layout,
                           std::span<const double> x, PhiloxRng& predictive_rng,
                           std::span<double> out) {
  std::size_t k = 0;
  if (spec.kind == ModelKind::copula) {
    const std::size_t p = layout.p();
    for (std::size_t j = 0; j < p; ++j) out[k++] = math::invlogit(x[layout.b1(j)]);
    for (std::size_t j = 0; j < p; ++j) out[k++] = math::invlogit(x[layout.b2(j)]);
    for (std::size_t j = 0; j < p; ++j) {
      const double t = layout.has_assoc() ? x[layout.d(j)] : spec.fixed_assoc.value_or(0.0);
      const double theta = copula_theta_from_unconstrained(spec.family, t);
      out[k++] = kendall_tau(spec.family, theta);
    }
    for (std::size_t j = 0; j < p; ++j) {
      const double t = layout.has_assoc() ? x[layout.d(j)] : spec.fixed_assoc.value_or(0.0);
      out[k++] = copula_theta_from_unconstrained(spec.family, t);
    }
  } else {
    const double mul1 = x[layout.mul(0)], mul2 = x[layout.mul(1)];
    const double s1 = std::exp(x[layout.log_sigma(0)]);
    const double s2 = std::exp(x[layout.log_sigma(1)]);
    const double rho = std::tanh(x[layout.etarho()]);
    double mu1_acc = 0.0, mu2_acc = 0.0;
    const double cross = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < layout.n(); ++i) {
      const double z1 = predictive_rng.normal();
      const double z2 = rho * z1 + cross * predictive_rng.normal();
      mu1_acc += math::invlogit(mul1 + s1 * z1);
      mu2_acc += math::invlogit(mul2 + s2 * z2);
    }
    out[k++] = mu1_acc / static_cast<double>(layout.n());
    out[k++] = mu2_acc / static_cast<double>(layout.n());
    out[k++] = math::invlogit(mul1);
    out[k++] = math::invlogit(mul2);
    out[k++] = rho;
    out[k++] = 2.0 / math::pi * std::asin(rho);
    out[k++] = s1;
    out[k++] = s2;
  }
  for (std::size_t i = 0; i < layout.n(); ++i) out[k++] = math::invlogit(x[layout.l1(i)]);
  for (std::size_t i = 0; i < layout.n(); ++i) out[k++] = math::invlogit(x[layout.l2(i)]);
}

}  // namespace fit_detail

/// Fit the model: run all chains and attach constrained views and the
/// pointwise log-likelihood matrix (2n columns: tp terms then tn terms).
inline FitResult run_chains(const ModelSpec& spec, const Dataset& data, const ChainConfig& config,
                            bool parallel = true) {
  config.validate();
  Posterior posterior(spec, data);
  FitResult fit;
  fit.spec = spec;
  fit.config = config;
  fit.data = data;
  fit.formula = spec.design.formula();
  fit.cells = spec.design.column_names;
  fit.unconstrained_names = posterior.layout().names(spec);
  fit.chains = run_nuts(posterior, config, parallel);

  const auto& layout = posterior.layout();
  const std::size_t n = data.size();
  const auto cnames = fit_detail::constrained_names(spec, layout.p(), n);
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    auto& chain = fit.chains[c];
    // predictive stream ids start past the sampler's chain streams
    PhiloxRng predictive(config.seed, static_cast<std::uint32_t>(config.chains + c));
    chain.constrained_names = cnames;
    chain.constrained.assign(static_cast<std::size_t>(chain.kept) * cnames.size(), 0.0);
    chain.loglik_cols = static_cast<int>(2 * n);
    chain.loglik.assign(static_cast<std::size_t>(chain.kept) * 2 * n, 0.0);
    for (int s = 0; s < chain.kept; ++s) {
      const std::span<const double> x(chain.draws.data() + static_cast<std::size_t>(s) * chain.dim,
                                      static_cast<std::size_t>(chain.dim));
      predictive.set_block(static_cast<std::uint64_t>(s));
      fit_detail::constrain_draw(spec, layout, x, predictive,
                                 {chain.constrained.data() + s * cnames.size(), cnames.size()});
      posterior.pointwise_log_likelihood(
          x, {chain.loglik.data() + static_cast<std::size_t>(s) * 2 * n, 2 * n});
    }
  }
  return fit;
}

}  // namespace dtameta

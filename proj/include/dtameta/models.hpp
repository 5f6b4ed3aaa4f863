// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtameta/copulas.hpp"
#include "dtameta/data.hpp"
#include "dtameta/dual.hpp"
#include "dtameta/errors.hpp"
#include "dtameta/math.hpp"

namespace dtameta {

enum class ModelKind { copula, brma };

/// Prior scales. Regression coefficients (B, C, D and the BRMA location /
/// Fisher-z parameters) get Normal(0, coef_sd) on their unconstrained scale;
/// the BRMA between-study standard deviations get half-Cauchy(0, sigma_scale).
/// psi_scale is reserved for an explicit certainty prior; the default model
/// places the certainty prior implicitly through the C coefficients.
struct PriorConfig {
  double coef_sd = 10.0;
  double sigma_scale = 2.5;
  double psi_scale = 2.5;
};

/// Model definition: which joint distribution ties the study-specific
/// sensitivities and specificities together, and the shared design matrix.
/// One formula drives the mean, certainty and association structure alike
/// (X = W = Z), so design_mu/design_psi/design_assoc all view `design`.
struct ModelSpec {
  ModelKind kind = ModelKind::copula;
  CopulaFamily family = CopulaFamily::gauss;
  DesignMatrix design;
  PriorConfig priors{};
  /// When set, the association block is dropped from the sampled parameters
  /// and every study's unconstrained association is pinned to this value
  /// (e.g. 0 for an independence fit).
  std::optional<double> fixed_assoc;

  const DesignMatrix& design_mu() const { return design; }
  const DesignMatrix& design_psi() const { return design; }
  const DesignMatrix& design_assoc() const { return design; }

  std::string model_name() const {
    return kind == ModelKind::brma ? "brma" : to_string(family);
  }

  static ModelSpec copula_model(CopulaFamily family, DesignMatrix design,
                                PriorConfig priors = {}) {
    ModelSpec s;
    s.kind = ModelKind::copula;
    s.family = family;
    s.design = std::move(design);
    s.priors = priors;
    return s;
  }

  /// BRMA is intercept-only by construction (a single mean pair and one rho).
  static ModelSpec brma_model(std::size_t n_studies, PriorConfig priors = {}) {
    ModelSpec s;
    s.kind = ModelKind::brma;
    s.priors = priors;
    s.design.n_rows = n_studies;
    s.design.n_cols = 1;
    s.design.values.assign(n_studies, 1.0);
    s.design.column_names = {"(Intercept)"};
    return s;
  }
};

/// Flat unconstrained parameter layout.
///
/// copula: B1[p] B2[p] C1[p] C2[p] D[p] l1[n] l2[n]   (D absent when the
/// association is fixed); l are the latent logit(sensitivity)/logit(specificity).
/// brma:   mul[2] log_sigma[2] etarho l1[n] l2[n]
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const ModelSpec& spec, std::size_t n_studies)
      : kind_(spec.kind),
        p_(spec.kind == ModelKind::copula ? spec.design.n_cols : 1),
        n_(n_studies),
        has_assoc_(spec.kind == ModelKind::copula && !spec.fixed_assoc.has_value()) {}

  std::size_t dim() const {
    if (kind_ == ModelKind::brma) return 5 + 2 * n_;
    return (has_assoc_ ? 5 : 4) * p_ + 2 * n_;
  }
  std::size_t n_coef() const { return dim() - 2 * n_; }
  std::size_t p() const { return p_; }
  std::size_t n() const { return n_; }
  bool has_assoc() const { return has_assoc_; }

  // copula blocks
  std::size_t b1(std::size_t j) const { return j; }
  std::size_t b2(std::size_t j) const { return p_ + j; }
  std::size_t c1(std::size_t j) const { return 2 * p_ + j; }
  std::size_t c2(std::size_t j) const { return 3 * p_ + j; }
  std::size_t d(std::size_t j) const { return 4 * p_ + j; }

  // brma blocks
  std::size_t mul(std::size_t j) const { return j; }
  std::size_t log_sigma(std::size_t j) const { return 2 + j; }
  std::size_t etarho() const { return 4; }

  std::size_t l1(std::size_t i) const { return n_coef() + i; }
  std::size_t l2(std::size_t i) const { return n_coef() + n_ + i; }

  std::vector<std::string> names(const ModelSpec& spec) const {
    std::vector<std::string> out(dim());
    if (kind_ == ModelKind::brma) {
      out[0] = "mul[1]";
      out[1] = "mul[2]";
      out[2] = "log_sigma[1]";
      out[3] = "log_sigma[2]";
      out[4] = "etarho";
    } else {
      const auto& cols = spec.design.column_names;
      for (std::size_t j = 0; j < p_; ++j) {
        out[b1(j)] = "B1[" + cols[j] + "]";
        out[b2(j)] = "B2[" + cols[j] + "]";
        out[c1(j)] = "C1[" + cols[j] + "]";
        out[c2(j)] = "C2[" + cols[j] + "]";
        if (has_assoc_) out[d(j)] = "D[" + cols[j] + "]";
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      out[l1(i)] = "logitp1[" + std::to_string(i + 1) + "]";
      out[l2(i)] = "logitp2[" + std::to_string(i + 1) + "]";
    }
    return out;
  }

 private:
  ModelKind kind_ = ModelKind::copula;
  std::size_t p_ = 1;
  std::size_t n_ = 0;
  bool has_assoc_ = true;
};

namespace model_detail {

inline constexpr double pi_eps = 1e-12;

struct StudyCounts {
  int tp, n_dis, tn, n_h;
};

/// Binomial layer of one study; stable in the latent logits.
template <typename T>
T study_log_likelihood(const StudyCounts& s, const T& l1, const T& l2) {
  return math::binom_lpmf_logit(s.tp, s.n_dis, l1) + math::binom_lpmf_logit(s.tn, s.n_h, l2);
}

/// Copula-model between-study layer at the constrained scale:
/// log Beta(pi1) + log Beta(pi2) + log c(F(pi1), F(pi2), theta).
template <typename T>
T copula_random_effects(CopulaFamily family, const T& eta1, const T& eta2, const T& zeta1,
                        const T& zeta2, const T& assoc_unc, const T& l1, const T& l2) {
  using std::exp;
  const T mu1 = math::invlogit(eta1);
  const T mu2 = math::invlogit(eta2);
  const T psi1 = exp(zeta1);
  const T psi2 = exp(zeta2);
  const T a1 = mu1 * psi1;
  const T b1 = (1.0 - mu1) * psi1;
  const T a2 = mu2 * psi2;
  const T b2 = (1.0 - mu2) * psi2;
  const T p1 = clamp(math::invlogit(l1), pi_eps, 1.0 - pi_eps);
  const T p2 = clamp(math::invlogit(l2), pi_eps, 1.0 - pi_eps);
  const T u = math::ibeta(a1, b1, p1);
  const T v = math::ibeta(a2, b2, p2);
  const T theta = copula_theta_from_unconstrained(family, assoc_unc);
  return math::beta_lpdf(p1, a1, b1) + math::beta_lpdf(p2, a2, b2) +
         copula_log_density_unchecked(family, u, v, theta);
}

/// BRMA between-study layer: bivariate normal on the latent logits.
template <typename T>
T brma_random_effects(const T& mul1, const T& mul2, const T& ls1, const T& ls2,
                      const T& etarho, const T& l1, const T& l2) {
  using std::exp;
  using std::log1p;
  using std::tanh;
  const T rho = clamp(tanh(etarho), -1.0 + 1e-12, 1.0 - 1e-12);
  const T z1 = (l1 - mul1) * exp(-ls1);
  const T z2 = (l2 - mul2) * exp(-ls2);
  const T r2 = rho * rho;
  return -math::log_two_pi - ls1 - ls2 - 0.5 * log1p(-r2) -
         (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * (1.0 - r2));
}

/// log prior of the BRMA top-level parameters, including the log-scale
/// Jacobian for sigma = exp(log_sigma) under its half-Cauchy prior.
template <typename T>
T brma_global_prior(const T& mul1, const T& mul2, const T& ls1, const T& ls2, const T& etarho,
                    const PriorConfig& pc) {
  using std::exp;
  using std::log1p;
  T lp = math::normal_lpdf(mul1, 0.0, pc.coef_sd) + math::normal_lpdf(mul2, 0.0, pc.coef_sd) +
         math::normal_lpdf(etarho, 0.0, pc.coef_sd);
  const double half_cauchy_const = std::log(2.0) - std::log(math::pi) - std::log(pc.sigma_scale);
  const T s1 = exp(ls1);
  const T s2 = exp(ls2);
  const double inv_scale = 1.0 / pc.sigma_scale;
  lp += half_cauchy_const - log1p((s1 * inv_scale) * (s1 * inv_scale)) + ls1;
  lp += half_cauchy_const - log1p((s2 * inv_scale) * (s2 * inv_scale)) + ls2;
  return lp;
}

}  // namespace model_detail

/// Log-posterior (and gradient) evaluator over the flat unconstrained vector.
///
/// The gradient is forward-mode dual-number differentiation of the same
/// templated terms the value path runs: each study contributes through seven
/// scalars (the two mean / two certainty / one association linear predictors
/// and the two latent logits), so a single Dual<7> sweep per study yields all
/// partials, which the chain rule scatters through the design matrix.
class Posterior {
 public:
  Posterior(const ModelSpec& spec, const Dataset& data)
      : spec_(spec), layout_(spec, data.size()) {
    if (spec.design.n_rows != data.size())
      throw layout_error("design matrix rows != number of studies");
    for (const auto& r : data.records) {
      studies_.push_back({r.tp, r.n_diseased, r.tn, r.n_healthy});
    }
  }

  const ParamLayout& layout() const { return layout_; }
  const ModelSpec& spec() const { return spec_; }
  std::size_t dim() const { return layout_.dim(); }

  double log_posterior(std::span<const double> x) const {
    check_dim(x.size());
    double lp = prior_value(x);
    for (std::size_t i = 0; i < studies_.size(); ++i) lp += study_value(x, i);
    return lp;
  }

  /// Gradient via Dual sweeps; returns the log-posterior value.
  double log_posterior_grad(std::span<const double> x, std::span<double> grad) const {
    check_dim(x.size());
    check_dim(grad.size());
    std::fill(grad.begin(), grad.end(), 0.0);
    double lp = prior_grad(x, grad);
    for (std::size_t i = 0; i < studies_.size(); ++i) lp += study_grad(x, i, grad);
    return lp;
  }

  /// Binomial layer only (sums over both margins of every study).
  double log_likelihood(std::span<const double> x) const {
    check_dim(x.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      ll += model_detail::study_log_likelihood(studies_[i], x[layout_.l1(i)], x[layout_.l2(i)]);
    }
    return ll;
  }

  /// Pointwise log-likelihood entries for WAIC: first the n true-positive
  /// terms, then the n true-negative terms.
  void pointwise_log_likelihood(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = studies_.size();
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = math::binom_lpmf_logit(studies_[i].tp, studies_[i].n_dis, x[layout_.l1(i)]);
      out[n + i] = math::binom_lpmf_logit(studies_[i].tn, studies_[i].n_h, x[layout_.l2(i)]);
    }
  }

  /// Between-study layer on the constrained scale (copula models only).
  double log_random_effects_density(std::span<const double> x) const {
    if (spec_.kind != ModelKind::copula)
      throw capability_error("log_random_effects_density applies to copula models");
    check_dim(x.size());
    double lp = 0.0;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      const auto lin = linear_predictors(x, i);
      lp += model_detail::copula_random_effects(spec_.family, lin[0], lin[1], lin[2], lin[3],
                                                lin[4], x[layout_.l1(i)], x[layout_.l2(i)]);
    }
    return lp;
  }

  /// Sum of logistic Jacobians for the latent logits (copula models).
  double latent_jacobian(std::span<const double> x) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < studies_.size(); ++i) {
      lp += math::log_logistic_jacobian(x[layout_.l1(i)]) +
            math::log_logistic_jacobian(x[layout_.l2(i)]);
    }
    return lp;
  }

  double log_prior(std::span<const double> x) const {
    check_dim(x.size());
    return prior_value(x);
  }

 private:
  void check_dim(std::size_t got) const {
    if (got != layout_.dim())
      throw layout_error("parameter vector length " + std::to_string(got) +
                         " != layout dim " + std::to_string(layout_.dim()));
  }

  std::array<double, 5> linear_predictors(std::span<const double> x, std::size_t i) const {
    const auto& X = spec_.design;
    std::array<double, 5> lin{0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < X.n_cols; ++j) {
      const double xij = X(i, j);
      if (xij == 0.0) continue;
      lin[0] += xij * x[layout_.b1(j)];
      lin[1] += xij * x[layout_.b2(j)];
      lin[2] += xij * x[layout_.c1(j)];
      lin[3] += xij * x[layout_.c2(j)];
      if (layout_.has_assoc()) lin[4] += xij * x[layout_.d(j)];
    }
    if (!layout_.has_assoc()) lin[4] = spec_.fixed_assoc.value_or(0.0);
    return lin;
  }

  template <typename T>
  T study_term(std::size_t i, const T& a0, const T& a1, const T& a2, const T& a3, const T& a4,
               const T& l1, const T& l2) const {
    const auto& s = studies_[i];
    T term = model_detail::study_log_likelihood(s, l1, l2);
    if (spec_.kind == ModelKind::copula) {
      term += model_detail::copula_random_effects(spec_.family, a0, a1, a2, a3, a4, l1, l2);
      term += math::log_logistic_jacobian(l1) + math::log_logistic_jacobian(l2);
    } else {
      term += model_detail::brma_random_effects(a0, a1, a2, a3, a4, l1, l2);
    }
    return term;
  }

  double study_value(std::span<const double> x, std::size_t i) const {
    if (spec_.kind == ModelKind::copula) {
      const auto lin = linear_predictors(x, i);
      return study_term<double>(i, lin[0], lin[1], lin[2], lin[3], lin[4], x[layout_.l1(i)],
                                x[layout_.l2(i)]);
    }
    return study_term<double>(i, x[layout_.mul(0)], x[layout_.mul(1)], x[layout_.log_sigma(0)],
                              x[layout_.log_sigma(1)], x[layout_.etarho()], x[layout_.l1(i)],
                              x[layout_.l2(i)]);
  }

  double study_grad(std::span<const double> x, std::size_t i, std::span<double> grad) const {
    using D7 = Dual<7>;
    D7 t;
    if (spec_.kind == ModelKind::copula) {
      const auto lin = linear_predictors(x, i);
      const D7 a0 = D7::seeded(lin[0], 0);
      const D7 a1 = D7::seeded(lin[1], 1);
      const D7 a2 = D7::seeded(lin[2], 2);
      const D7 a3 = D7::seeded(lin[3], 3);
      const D7 a4 = layout_.has_assoc() ? D7::seeded(lin[4], 4) : D7(lin[4]);
      const D7 l1 = D7::seeded(x[layout_.l1(i)], 5);
      const D7 l2 = D7::seeded(x[layout_.l2(i)], 6);
      t = study_term<D7>(i, a0, a1, a2, a3, a4, l1, l2);
      const auto& X = spec_.design;
      for (std::size_t j = 0; j < X.n_cols; ++j) {
        const double xij = X(i, j);
        if (xij == 0.0) continue;
        grad[layout_.b1(j)] += xij * t.der[0];
        grad[layout_.b2(j)] += xij * t.der[1];
        grad[layout_.c1(j)] += xij * t.der[2];
        grad[layout_.c2(j)] += xij * t.der[3];
        if (layout_.has_assoc()) grad[layout_.d(j)] += xij * t.der[4];
      }
    } else {
      const D7 a0 = D7::seeded(x[layout_.mul(0)], 0);
      const D7 a1 = D7::seeded(x[layout_.mul(1)], 1);
      const D7 a2 = D7::seeded(x[layout_.log_sigma(0)], 2);
      const D7 a3 = D7::seeded(x[layout_.log_sigma(1)], 3);
      const D7 a4 = D7::seeded(x[layout_.etarho()], 4);
      const D7 l1 = D7::seeded(x[layout_.l1(i)], 5);
      const D7 l2 = D7::seeded(x[layout_.l2(i)], 6);
      t = study_term<D7>(i, a0, a1, a2, a3, a4, l1, l2);
      grad[layout_.mul(0)] += t.der[0];
      grad[layout_.mul(1)] += t.der[1];
      grad[layout_.log_sigma(0)] += t.der[2];
      grad[layout_.log_sigma(1)] += t.der[3];
      grad[layout_.etarho()] += t.der[4];
    }
    grad[layout_.l1(i)] += t.der[5];
    grad[layout_.l2(i)] += t.der[6];
    return t.val;
  }

  double prior_value(std::span<const double> x) const {
    if (spec_.kind == ModelKind::brma) {
      return model_detail::brma_global_prior<double>(
          x[layout_.mul(0)], x[layout_.mul(1)], x[layout_.log_sigma(0)],
          x[layout_.log_sigma(1)], x[layout_.etarho()], spec_.priors);
    }
    double lp = 0.0;
    for (std::size_t k = 0; k < layout_.n_coef(); ++k) {
      lp += math::normal_lpdf(x[k], 0.0, spec_.priors.coef_sd);
    }
    return lp;
  }

  double prior_grad(std::span<const double> x, std::span<double> grad) const {
    if (spec_.kind == ModelKind::brma) {
      using D5 = Dual<5>;
      const D5 t = model_detail::brma_global_prior<D5>(
          D5::seeded(x[layout_.mul(0)], 0), D5::seeded(x[layout_.mul(1)], 1),
          D5::seeded(x[layout_.log_sigma(0)], 2), D5::seeded(x[layout_.log_sigma(1)], 3),
          D5::seeded(x[layout_.etarho()], 4), spec_.priors);
      for (std::size_t k = 0; k < 5; ++k) grad[k] += t.der[k];
      return t.val;
    }
    double lp = 0.0;
    for (std::size_t k = 0; k < layout_.n_coef(); ++k) {
      using D1 = Dual<1>;
      const D1 t = math::normal_lpdf(D1::seeded(x[k], 0), 0.0, spec_.priors.coef_sd);
      grad[k] += t.der[0];
      lp += t.val;
    }
    return lp;
  }

  ModelSpec spec_;
  ParamLayout layout_;
  std::vector<model_detail::StudyCounts> studies_;
};

/// Meta-analytic mean E(pi_j) for the BRMA model: the logit-normal mean
/// integral evaluated by 61-node Gauss-Hermite quadrature per posterior draw.
inline std::pair<double, double> brma_meta_analytic_mean(double mul1, double mul2, double sigma1,
                                                         double sigma2) {
  if (sigma1 < 0.0 || sigma2 < 0.0) throw domain_error("brma_meta_analytic_mean: sigma < 0");
  return {math::logit_normal_mean(mul1, sigma1), math::logit_normal_mean(mul2, sigma2)};
}

}  // namespace dtameta

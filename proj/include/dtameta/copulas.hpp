// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "dtameta/dual.hpp"
#include "dtameta/errors.hpp"
#include "dtameta/math.hpp"

namespace dtameta {

/// Copula families supported for the bivariate beta-binomial models.
/// c90 / c270 are the Clayton copula rotated by 90 and 270 degrees, which
/// turns its positive-dependence structure into negative dependence.
enum class CopulaFamily { gauss, frank, fgm, c90, c270 };

inline std::string to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::gauss: return "gauss";
    case CopulaFamily::frank: return "frank";
    case CopulaFamily::fgm: return "fgm";
    case CopulaFamily::c90: return "c90";
    case CopulaFamily::c270: return "c270";
  }
  return "?";
}

inline CopulaFamily copula_family_from_string(const std::string& s) {
  if (s == "gauss") return CopulaFamily::gauss;
  if (s == "frank") return CopulaFamily::frank;
  if (s == "fgm") return CopulaFamily::fgm;
  if (s == "c90") return CopulaFamily::c90;
  if (s == "c270") return CopulaFamily::c270;
  throw lookup_error("unknown copula family: " + s);
}

/// Association parameter with its family tag.
struct CopulaParam {
  CopulaFamily family{CopulaFamily::gauss};
  double theta{0.0};
};

inline bool theta_in_domain(CopulaFamily f, double theta) {
  switch (f) {
    case CopulaFamily::gauss:
    case CopulaFamily::fgm: return theta > -1.0 && theta < 1.0;
    case CopulaFamily::frank: return std::isfinite(theta);
    case CopulaFamily::c90:
    case CopulaFamily::c270: return theta > 0.0;
  }
  return false;
}

inline void check_theta(CopulaFamily f, double theta) {
  if (std::isnan(theta)) throw std::invalid_argument("copula theta is NaN");
  if (!theta_in_domain(f, theta)) {
    throw domain_error("theta " + std::to_string(theta) + " outside domain of " + to_string(f));
  }
}

namespace copula_detail {

inline constexpr double uv_eps = 1e-12;

// log density of the bivariate Gaussian copula.
template <typename T>
T gauss_log_density(const T& u, const T& v, const T& rho) {
  using math::inv_Phi;
  const T qu = inv_Phi(u);
  const T qv = inv_Phi(v);
  const T r2 = rho * rho;
  const T denom = 1.0 - r2;
  using std::log;
  return -0.5 * log(denom) +
         (2.0 * rho * qu * qv - r2 * (qu * qu + qv * qv)) / (2.0 * denom);
}

// Frank log density for theta > 0; bounded intermediates via expm1.
template <typename T>
T frank_log_density_pos(const T& u, const T& v, const T& theta) {
  using std::expm1;
  using std::log;
  const T em = expm1(-theta);                       // in (-1, 0)
  const T e = -em - expm1(-theta * u) * expm1(-theta * v);  // > 0 for theta > 0
  return log(theta) + log(-em) - theta * (u + v) - 2.0 * log(e);
}

// Second-order expansion around independence; Frank's closed form is 0/0 at
// theta = 0 although the limit is well defined.
template <typename T>
T frank_log_density_taylor(const T& u, const T& v, const T& theta) {
  const T linear = 0.5 * (2.0 * u - 1.0) * (2.0 * v - 1.0);
  const T quad = u * v * (1.0 - u) * (1.0 - v) - 1.0 / 24.0;
  return theta * (linear + theta * quad);
}

template <typename T>
T frank_log_density(const T& u, const T& v, const T& theta) {
  if (std::fabs(value_of(theta)) < 1e-4) return frank_log_density_taylor(u, v, theta);
  // c(u, v, -theta) = c(1 - u, v, theta)
  if (value_of(theta) < 0.0) {
    const T refl = 1.0 - u;
    return frank_log_density_pos(refl, v, -theta);
  }
  return frank_log_density_pos(u, v, theta);
}

template <typename T>
T fgm_log_density(const T& u, const T& v, const T& theta) {
  using std::log1p;
  return log1p(theta * (2.0 * u - 1.0) * (2.0 * v - 1.0));
}

// log(u^-theta + v^-theta - 1) without overflow for large theta.
template <typename T>
T clayton_log_s(const T& u, const T& v, const T& theta) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  const T a = -theta * log(u);
  const T b = -theta * log(v);
  const double am = value_of(a), bm = value_of(b);
  if (am < 700.0 && bm < 700.0) {
    return log1p(expm1(a) + expm1(b));
  }
  const T m = am >= bm ? a : b;
  return m + log(exp(a - m) + exp(b - m) - exp(-m));
}

template <typename T>
T clayton_log_density(const T& u, const T& v, const T& theta) {
  using std::log;
  using std::log1p;
  const T ls = clayton_log_s(u, v, theta);
  // exponent (2 theta + 1)/theta written as 2 + 1/theta so theta -> inf stays finite
  return log1p(theta) - (1.0 + theta) * (log(u) + log(v)) - (2.0 + 1.0 / theta) * ls;
}

template <typename T>
T log_density_core(CopulaFamily f, const T& u, const T& v, const T& theta) {
  switch (f) {
    case CopulaFamily::gauss: return gauss_log_density(u, v, theta);
    case CopulaFamily::frank: return frank_log_density(u, v, theta);
    case CopulaFamily::fgm: return fgm_log_density(u, v, theta);
    case CopulaFamily::c90: {
      const T ru = 1.0 - u;
      return clayton_log_density(ru, v, theta);
    }
    case CopulaFamily::c270: {
      const T rv = 1.0 - v;
      return clayton_log_density(u, rv, theta);
    }
  }
  return T(0.0);
}

inline double clayton_cdf(double u, double v, double theta) {
  return std::exp(-value_of(clayton_log_s(u, v, theta)) / theta);
}

inline double frank_cdf(double u, double v, double theta) {
  if (std::fabs(theta) < 1e-5) {
    return u * v * (1.0 + 0.5 * theta * (1.0 - u) * (1.0 - v));
  }
  if (theta < -30.0) {
    // countermonotone-side reflection avoids exp overflow for large -theta
    return v - frank_cdf(1.0 - u, v, -theta);
  }
  if (theta > 0.0 && theta * std::min(u, v) > 700.0) return std::min(u, v);
  return -std::log1p(std::expm1(-theta * u) * std::expm1(-theta * v) / std::expm1(-theta)) /
         theta;
}

}  // namespace copula_detail

/// Association parameter from its unconstrained representation; the link per
/// family matches the model parameterisation (tanh for gauss/fgm, identity
/// for frank, exp for the rotated Clayton whose theta must stay positive).
template <typename T>
T copula_theta_from_unconstrained(CopulaFamily f, const T& t) {
  using std::exp;
  using std::tanh;
  switch (f) {
    case CopulaFamily::gauss:
    case CopulaFamily::fgm: return clamp(tanh(t), -1.0 + 1e-12, 1.0 - 1e-12);
    case CopulaFamily::frank: return t;
    case CopulaFamily::c90:
    case CopulaFamily::c270: return exp(t);
  }
  return t;
}

/// Density evaluation used inside model code: assumes theta is already in the
/// family domain (guaranteed by the link), clamps u and v away from 0/1.
template <typename T>
T copula_log_density_unchecked(CopulaFamily f, const T& u, const T& v, const T& theta) {
  const T uc = clamp(u, copula_detail::uv_eps, 1.0 - copula_detail::uv_eps);
  const T vc = clamp(v, copula_detail::uv_eps, 1.0 - copula_detail::uv_eps);
  return copula_detail::log_density_core(f, uc, vc, theta);
}

/// log c(u, v, theta) with argument validation.
inline double copula_log_density(CopulaFamily f, double u, double v, double theta) {
  if (std::isnan(u) || std::isnan(v)) throw std::invalid_argument("copula_log_density: NaN u/v");
  check_theta(f, theta);
  return copula_log_density_unchecked(f, u, v, theta);
}

/// Copula CDF C(u, v, theta) with exact uniform-margin boundaries.
inline double copula_cdf(CopulaFamily f, double u, double v, double theta) {
  if (std::isnan(u) || std::isnan(v)) throw std::invalid_argument("copula_cdf: NaN u/v");
  check_theta(f, theta);
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return std::min(v, 1.0);
  if (v >= 1.0) return u;
  using namespace copula_detail;
  const double uc = clamp(u, uv_eps, 1.0 - uv_eps);
  const double vc = clamp(v, uv_eps, 1.0 - uv_eps);
  switch (f) {
    case CopulaFamily::gauss:
      return math::bvn_cdf(math::inv_Phi(uc), math::inv_Phi(vc), theta);
    case CopulaFamily::frank: return frank_cdf(uc, vc, theta);
    case CopulaFamily::fgm:
      return uc * vc * (1.0 + theta * (1.0 - uc) * (1.0 - vc));
    case CopulaFamily::c90: return vc - clayton_cdf(1.0 - uc, vc, theta);
    case CopulaFamily::c270: return uc - clayton_cdf(uc, 1.0 - vc, theta);
  }
  return 0.0;
}

/// Debye function D_j(delta) = (j / delta^j) Int_0^delta t^j / (e^t - 1) dt,
/// with D_j(0) = 1 by continuity. Negative delta uses the same integral.
inline double debye(int j, double delta) {
  if (j != 1 && j != 2) throw std::invalid_argument("debye: j must be 1 or 2");
  if (std::isnan(delta)) throw std::invalid_argument("debye: NaN delta");
  const double ad = std::fabs(delta);
  if (ad < 0.1) {
    // Bernoulli-number series: 1 - j d / (2(j+1)) + sum_k j B_2k d^2k / ((2k+j)(2k)!)
    const double d2 = delta * delta;
    return 1.0 - j * delta / (2.0 * (j + 1.0)) + j * d2 / (12.0 * (j + 2.0)) -
           j * d2 * d2 / (720.0 * (j + 4.0)) + j * d2 * d2 * d2 / (30240.0 * (j + 6.0));
  }
  const auto integrand = [j](double t) {
    if (std::fabs(t) < 1e-6) {
      const double base = 1.0 - 0.5 * t + t * t / 12.0;
      return j == 1 ? base : t * base;
    }
    const double tj = j == 1 ? t : t * t;
    return tj / std::expm1(t);
  };
  const double integral = math::integrate(integrand, 0.0, delta, 1e-13);
  return j * integral / std::pow(delta, j);
}

/// Kendall's tau as a function of the association parameter. The rotated
/// Clayton families model negative dependence, so tau is reported negated.
inline double kendall_tau(CopulaFamily f, double theta) {
  check_theta(f, theta);
  switch (f) {
    case CopulaFamily::gauss: return 2.0 / math::pi * std::asin(theta);
    case CopulaFamily::frank: {
      if (std::fabs(theta) < 1e-4) return theta / 9.0 * (1.0 - theta * theta / 100.0);
      return 1.0 + 4.0 * (debye(1, theta) - 1.0) / theta;
    }
    case CopulaFamily::fgm: return 2.0 * theta / 9.0;
    case CopulaFamily::c90:
    case CopulaFamily::c270: return -theta / (theta + 2.0);
  }
  return 0.0;
}

/// Spearman's rho, only available in closed/Debye form for fgm and frank.
inline double spearman_rho(CopulaFamily f, double theta) {
  check_theta(f, theta);
  switch (f) {
    case CopulaFamily::fgm: return theta / 3.0;
    case CopulaFamily::frank: {
      if (std::fabs(theta) < 1e-4) return theta / 6.0;
      return 1.0 - 12.0 * (debye(1, theta) - debye(2, theta)) / theta;
    }
    default:
      throw capability_error("spearman_rho not available for " + to_string(f));
  }
}

/// Map theta into its unconstrained representation.
inline double copula_to_unconstrained(CopulaFamily f, double theta) {
  check_theta(f, theta);
  switch (f) {
    case CopulaFamily::gauss:
    case CopulaFamily::fgm: return std::atanh(theta);
    case CopulaFamily::frank: return theta;
    case CopulaFamily::c90:
    case CopulaFamily::c270: return std::log(theta);
  }
  return theta;
}

/// Inverse of copula_to_unconstrained; returns (theta, log |d theta / d t|).
inline std::pair<double, double> copula_from_unconstrained(CopulaFamily f, double t) {
  if (std::isnan(t)) throw std::invalid_argument("copula_from_unconstrained: NaN");
  switch (f) {
    case CopulaFamily::gauss:
    case CopulaFamily::fgm: {
      const double theta = std::tanh(t);
      return {theta, std::log1p(-theta * theta)};
    }
    case CopulaFamily::frank: return {t, 0.0};
    case CopulaFamily::c90:
    case CopulaFamily::c270: return {std::exp(t), t};
  }
  return {t, 0.0};
}

}  // namespace dtameta

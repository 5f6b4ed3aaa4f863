// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dtameta/dual.hpp"
#include "dtameta/errors.hpp"

namespace dtameta::math {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double log_two_pi = 1.8378770664093454836;
inline constexpr double sqrt_two = 1.4142135623730950488;
inline constexpr double sqrt_pi = 1.7724538509055160273;

// ---------------------------------------------------------------------------
// logistic-scale helpers
// ---------------------------------------------------------------------------

template <typename T>
T log1pexp(const T& x) {
  using std::exp;
  using std::log1p;
  if (x > 35.0) return x + exp(-x);
  if (x < -35.0) return exp(x);
  return log1p(exp(x));
}

template <typename T>
T invlogit(const T& x) {
  using std::exp;
  if (x >= 0.0) {
    T e = exp(-x);
    return 1.0 / (1.0 + e);
  }
  T e = exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log of the logistic density sigma'(x) = sigma(x) (1 - sigma(x)).
template <typename T>
T log_logistic_jacobian(const T& x) {
  return -log1pexp(x) - log1pexp(-x);
}

// ---------------------------------------------------------------------------
// gamma-family functions
// ---------------------------------------------------------------------------

/// Digamma via upward recurrence into the asymptotic region.
inline double digamma(double x) {
  double result = 0.0;
  while (x < 16.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

}  // namespace dtameta::math

namespace dtameta {

// lgamma for duals lives beside Dual so unqualified calls in generic code
// resolve through argument-dependent lookup.
template <std::size_t N>
Dual<N> lgamma(const Dual<N>& x) {
  return detail::chain(x, std::lgamma(x.val), math::digamma(x.val));
}

}  // namespace dtameta

namespace dtameta::math {

template <typename T>
T lbeta(const T& a, const T& b) {
  using std::lgamma;
  return lgamma(a) + lgamma(b) - lgamma(a + b);
}

inline double lchoose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// ---------------------------------------------------------------------------
// normal distribution
// ---------------------------------------------------------------------------

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * log_two_pi); }

inline double Phi(double x) { return 0.5 * std::erfc(-x / sqrt_two); }

template <std::size_t N>
Dual<N> Phi(const Dual<N>& x) {
  return detail::chain(x, Phi(x.val), norm_pdf(x.val));
}

/// Standard normal quantile, Wichura's AS 241 (PPND16), |error| < 1e-15.
/// NaN propagates quietly (model code treats it as a rejection signal).
inline double inv_Phi(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (std::isnan(p)) return p;
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw domain_error("inv_Phi: p outside [0,1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

template <std::size_t N>
Dual<N> inv_Phi(const Dual<N>& p) {
  const double z = inv_Phi(p.val);
  return detail::chain(p, z, 1.0 / norm_pdf(z));
}

template <typename T>
T normal_lpdf(const T& x, double mu, double sd) {
  T z = (x - mu) * (1.0 / sd);
  return -0.5 * z * z - std::log(sd) - 0.5 * log_two_pi;
}

// ---------------------------------------------------------------------------
// regularized incomplete beta function (continued fraction, AD-capable)
// ---------------------------------------------------------------------------

namespace detail_ibeta {

template <typename T>
T betacf(const T& a, const T& b, const T& x) {
  constexpr int max_iter = 500;
  constexpr double eps = 1e-15, fpmin = 1e-300;
  const T qab = a + b, qap = a + 1.0, qam = a - 1.0;
  T c = 1.0;
  T d = 1.0 - qab * x / qap;
  if (std::fabs(value_of(d)) < fpmin) d = fpmin;
  d = 1.0 / d;
  T h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    T aa = m * (b - static_cast<double>(m)) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(value_of(d)) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(value_of(c)) < fpmin) c = fpmin;
    d = 1.0 / d;
    h = h * (d * c);
    aa = -(a + static_cast<double>(m)) * (qab + static_cast<double>(m)) * x /
         ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(value_of(d)) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(value_of(c)) < fpmin) c = fpmin;
    d = 1.0 / d;
    const T del = d * c;
    h = h * del;
    if (std::fabs(value_of(del) - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail_ibeta

/// Regularized incomplete beta I_x(a, b); works on double and Dual scalars.
template <typename T>
T ibeta(const T& a, const T& b, const T& x) {
  using std::exp;
  using std::lgamma;
  using std::log;
  using std::log1p;
  if (value_of(x) <= 0.0) return T(0.0);
  if (value_of(x) >= 1.0) return T(1.0);
  const T log_bt = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log1p(-x);
  const T bt = exp(log_bt);
  if (value_of(x) < (value_of(a) + 1.0) / (value_of(a) + value_of(b) + 2.0)) {
    return bt * detail_ibeta::betacf(a, b, x) / a;
  }
  const T one_minus_x = 1.0 - x;
  return 1.0 - bt * detail_ibeta::betacf(b, a, one_minus_x) / b;
}

/// Inverse of I_x(a, b) in x by bisection to 1e-10.
inline double ibeta_inv(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ibeta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

template <typename T>
T beta_lpdf(const T& x, const T& a, const T& b) {
  using std::log;
  using std::log1p;
  return (a - 1.0) * log(x) + (b - 1.0) * log1p(-x) - lbeta(a, b);
}

/// Binomial log-pmf with the log-choose constant included.
template <typename T>
T binom_lpmf(int k, int n, const T& p) {
  using std::log;
  using std::log1p;
  return lchoose(n, k) + k * log(p) + (n - k) * log1p(-p);
}

/// Binomial log-pmf with success probability invlogit(l); stable in l.
template <typename T>
T binom_lpmf_logit(int k, int n, const T& l) {
  return lchoose(n, k) - k * log1pexp(-l) - (n - k) * log1pexp(l);
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

namespace detail_quad {

template <typename F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail_quad

/// Adaptive Simpson integral of f over [a, b] (a > b integrates with sign).
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, tol, max_depth);
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail_quad::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for integrals against exp(-x^2); weights sum to sqrt(pi).
/// Nodes by Newton iteration on the orthonormal Hermite recurrence.
inline QuadratureRule gauss_hermite(int n) {
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    for (int it = 0; it < 100; ++it) {
      double p1 = std::pow(pi, -0.25), p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// E[ invlogit(mu + sigma Z) ], Z standard normal, via 61-node Gauss-Hermite.
inline double logit_normal_mean(double mu, double sigma) {
  static const QuadratureRule rule = gauss_hermite(61);
  if (sigma <= 0.0) return invlogit(mu);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * invlogit(mu + sqrt_two * sigma * rule.nodes[i]);
  }
  return acc / sqrt_pi;
}

// ---------------------------------------------------------------------------
// bivariate normal CDF
// ---------------------------------------------------------------------------

/// P(X <= h, Y <= k) for standard bivariate normal with correlation rho,
/// via the tetrachoric angular integral evaluated adaptively.
inline double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho)) {
    throw domain_error("bvn_cdf: NaN argument");
  }
  if (rho >= 1.0 - 1e-15) return Phi(std::min(h, k));
  if (rho <= -1.0 + 1e-15) return std::max(0.0, Phi(h) + Phi(k) - 1.0);
  const double base = Phi(h) * Phi(k);
  if (rho == 0.0) return base;
  const double alpha = std::asin(rho);
  const auto f = [h, k](double t) {
    const double s = std::sin(t);
    const double c2 = 1.0 - s * s;
    return std::exp(-(h * h + k * k - 2.0 * h * k * s) / (2.0 * c2));
  };
  const double corr = integrate(f, 0.0, alpha, 1e-13) / (2.0 * pi);
  return std::min(1.0, std::max(0.0, base + corr));
}

// ---------------------------------------------------------------------------
// small sample-statistics helpers
// ---------------------------------------------------------------------------

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample variance with (n-1) denominator.
inline double variance(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

/// Equal-tailed empirical quantile, type-7 interpolation; xs must be sorted.
inline double quantile_sorted(std::span<const double> xs, double q) {
  const std::size_t n = xs.size();
  if (n == 1) return xs[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

inline double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace dtameta::math

// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace dtameta {

/// Forward-mode dual number: a value plus N partial derivatives.
///
/// Arithmetic propagates all N partials at once, so a single evaluation of a
/// templated function with seeded inputs yields the value and its gradient
/// with respect to the seeded slots. Model code is written against a generic
/// scalar T and instantiated with double (value path) and Dual<N> (gradient
/// path); the value part of every Dual operation performs exactly the same
/// double arithmetic as the plain instantiation.
template <std::size_t N>
struct Dual {
  double val{0.0};
  std::array<double, N> der{};

  Dual() = default;
  Dual(double v) : val(v) {}  // NOLINT: constants promote with zero derivative

  static Dual seeded(double v, std::size_t slot) {
    Dual d(v);
    d.der[slot] = 1.0;
    return d;
  }

  Dual& operator+=(const Dual& o) {
    val += o.val;
    for (std::size_t i = 0; i < N; ++i) der[i] += o.der[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val -= o.val;
    for (std::size_t i = 0; i < N; ++i) der[i] -= o.der[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) der[i] = der[i] * o.val + val * o.der[i];
    val *= o.val;
    return *this;
  }
  Dual& operator+=(double c) {
    val += c;
    return *this;
  }
  Dual& operator-=(double c) {
    val -= c;
    return *this;
  }
  Dual& operator*=(double c) {
    val *= c;
    for (std::size_t i = 0; i < N; ++i) der[i] *= c;
    return *this;
  }
};

// --- value extraction, uniform across double and Dual ---

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) {
  return x.val;
}

// --- arithmetic ---

template <std::size_t N>
Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r;
  r.val = -a.val;
  for (std::size_t i = 0; i < N; ++i) r.der[i] = -a.der[i];
  return r;
}

template <std::size_t N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  a += b;
  return a;
}
template <std::size_t N>
Dual<N> operator+(Dual<N> a, double b) {
  a.val += b;
  return a;
}
template <std::size_t N>
Dual<N> operator+(double a, Dual<N> b) {
  b.val += a;
  return b;
}

template <std::size_t N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  a -= b;
  return a;
}
template <std::size_t N>
Dual<N> operator-(Dual<N> a, double b) {
  a.val -= b;
  return a;
}
template <std::size_t N>
Dual<N> operator-(double a, const Dual<N>& b) {
  Dual<N> r;
  r.val = a - b.val;
  for (std::size_t i = 0; i < N; ++i) r.der[i] = -b.der[i];
  return r;
}

template <std::size_t N>
Dual<N> operator*(Dual<N> a, const Dual<N>& b) {
  a *= b;
  return a;
}
template <std::size_t N>
Dual<N> operator*(Dual<N> a, double b) {
  a *= b;
  return a;
}
template <std::size_t N>
Dual<N> operator*(double a, Dual<N> b) {
  b *= a;
  return b;
}

template <std::size_t N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  const double inv = 1.0 / b.val;
  r.val = a.val * inv;
  for (std::size_t i = 0; i < N; ++i) r.der[i] = (a.der[i] - r.val * b.der[i]) * inv;
  return r;
}
template <std::size_t N>
Dual<N> operator/(Dual<N> a, double b) {
  a *= (1.0 / b);
  return a;
}
template <std::size_t N>
Dual<N> operator/(double a, const Dual<N>& b) {
  Dual<N> r;
  const double inv = 1.0 / b.val;
  r.val = a * inv;
  const double s = -r.val * inv;
  for (std::size_t i = 0; i < N; ++i) r.der[i] = s * b.der[i];
  return r;
}

// --- comparisons (on values) ---

template <std::size_t N>
bool operator<(const Dual<N>& a, const Dual<N>& b) {
  return a.val < b.val;
}
template <std::size_t N>
bool operator<(const Dual<N>& a, double b) {
  return a.val < b;
}
template <std::size_t N>
bool operator<(double a, const Dual<N>& b) {
  return a < b.val;
}
template <std::size_t N>
bool operator>(const Dual<N>& a, const Dual<N>& b) {
  return a.val > b.val;
}
template <std::size_t N>
bool operator>(const Dual<N>& a, double b) {
  return a.val > b;
}
template <std::size_t N>
bool operator>(double a, const Dual<N>& b) {
  return a > b.val;
}
template <std::size_t N>
bool operator<=(const Dual<N>& a, double b) {
  return a.val <= b;
}
template <std::size_t N>
bool operator>=(const Dual<N>& a, double b) {
  return a.val >= b;
}

// --- elementary functions, chain rule applied to the value derivative ---

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double fval, double dfdx) {
  Dual<N> r;
  r.val = fval;
  for (std::size_t i = 0; i < N; ++i) r.der[i] = dfdx * x.der[i];
  return r;
}
}  // namespace detail

template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.val);
  return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> log(const Dual<N>& x) {
  return detail::chain(x, std::log(x.val), 1.0 / x.val);
}
template <std::size_t N>
Dual<N> log1p(const Dual<N>& x) {
  return detail::chain(x, std::log1p(x.val), 1.0 / (1.0 + x.val));
}
template <std::size_t N>
Dual<N> expm1(const Dual<N>& x) {
  const double e = std::expm1(x.val);
  return detail::chain(x, e, e + 1.0);
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.val);
  return detail::chain(x, s, 0.5 / s);
}
template <std::size_t N>
Dual<N> tanh(const Dual<N>& x) {
  const double t = std::tanh(x.val);
  return detail::chain(x, t, 1.0 - t * t);
}
template <std::size_t N>
Dual<N> pow(const Dual<N>& x, double p) {
  const double f = std::pow(x.val, p);
  return detail::chain(x, f, p * std::pow(x.val, p - 1.0));
}
template <std::size_t N>
Dual<N> fabs(const Dual<N>& x) {
  return x.val < 0.0 ? -x : x;
}
template <std::size_t N>
bool isfinite(const Dual<N>& x) {
  return std::isfinite(x.val);
}

/// Clamp by value; the derivative follows the active branch (zero when pinned).
template <std::size_t N>
Dual<N> clamp(const Dual<N>& x, double lo, double hi) {
  if (x.val < lo) return Dual<N>(lo);
  if (x.val > hi) return Dual<N>(hi);
  return x;
}
inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace dtameta

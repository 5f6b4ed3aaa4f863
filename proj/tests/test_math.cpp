// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "dtameta/dual.hpp"
#include "dtameta/math.hpp"
#include "dtameta/rng.hpp"

using namespace dtameta;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("inv_Phi matches reference quantiles") {
  CHECK_THAT(math::inv_Phi(0.5), WithinAbs(0.0, 1e-15));
  CHECK_THAT(math::inv_Phi(0.975), WithinAbs(1.959963984540054, 1e-12));
  CHECK_THAT(math::inv_Phi(0.995), WithinAbs(2.5758293035489004, 1e-12));
  CHECK_THAT(math::inv_Phi(0.999), WithinAbs(3.0902323061678132, 1e-12));
  CHECK_THAT(math::inv_Phi(1e-9), WithinAbs(-5.9978070150076865, 1e-11));
  CHECK_THAT(math::inv_Phi(0.3), WithinAbs(-0.52440051270804089, 1e-13));
  CHECK_THAT(math::inv_Phi(0.0001), WithinAbs(-3.7190164854556804, 1e-12));
}

TEST_CASE("Phi / inv_Phi round trip") {
  for (double u : {1e-10, 1e-4, 0.2, 0.5, 0.77, 1.0 - 1e-6}) {
    CHECK_THAT(math::Phi(math::inv_Phi(u)), WithinAbs(u, 1e-13));
  }
  for (double x : {-6.0, -1.3, 0.0, 0.5, 4.2}) {
    CHECK_THAT(math::inv_Phi(math::Phi(x)), WithinAbs(x, 1e-9));
  }
}

TEST_CASE("digamma matches reference") {
  CHECK_THAT(math::digamma(0.3), WithinAbs(-3.5025242222001332, 1e-12));
  CHECK_THAT(math::digamma(1.0), WithinAbs(-0.57721566490153287, 1e-13));
  CHECK_THAT(math::digamma(5.5), WithinAbs(1.611093148581751, 1e-13));
  CHECK_THAT(math::digamma(42.0), WithinAbs(3.7257176179372822, 1e-13));
}

TEST_CASE("regularized incomplete beta matches reference") {
  CHECK_THAT(math::ibeta(2.5, 3.5, 0.4), WithinAbs(0.48690419152611758, 1e-13));
  CHECK_THAT(math::ibeta(25.0, 9.0, 25.0 / 33.0), WithinAbs(0.59344534770499668, 1e-12));
  CHECK_THAT(math::ibeta(0.5, 0.5, 0.3), WithinAbs(0.36901011956554536, 1e-13));
  CHECK_THAT(math::ibeta(120.0, 80.0, 0.55), WithinAbs(0.075614859928047895, 1e-12));
  CHECK_THAT(math::ibeta(1.0, 1.0, 0.37), WithinAbs(0.37, 1e-14));
  CHECK(math::ibeta(2.0, 3.0, 0.0) == 0.0);
  CHECK(math::ibeta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("ibeta dual derivatives match finite differences") {
  const double h = 1e-6;
  for (auto [a, b, x] : {std::array{2.5, 3.5, 0.4}, std::array{8.0, 3.0, 0.81},
                         std::array{0.7, 1.9, 0.15}, std::array{40.0, 25.0, 0.6}}) {
    using D3 = Dual<3>;
    const D3 r = math::ibeta(D3::seeded(a, 0), D3::seeded(b, 1), D3::seeded(x, 2));
    const double da = (math::ibeta(a + h, b, x) - math::ibeta(a - h, b, x)) / (2 * h);
    const double db = (math::ibeta(a, b + h, x) - math::ibeta(a, b - h, x)) / (2 * h);
    const double dx = (math::ibeta(a, b, x + h) - math::ibeta(a, b, x - h)) / (2 * h);
    CHECK_THAT(r.val, WithinAbs(math::ibeta(a, b, x), 1e-15));
    CHECK_THAT(r.der[0], WithinRel(da, 1e-6));
    CHECK_THAT(r.der[1], WithinRel(db, 1e-6));
    CHECK_THAT(r.der[2], WithinRel(dx, 1e-6));
  }
}

TEST_CASE("ibeta_inv inverts ibeta") {
  for (auto [a, b, p] : {std::array{2.0, 5.0, 0.3}, std::array{25.0, 9.0, 0.975},
                         std::array{1.0, 10.0, 0.975}}) {
    const double x = math::ibeta_inv(a, b, p);
    CHECK_THAT(math::ibeta(a, b, x), WithinAbs(p, 1e-8));
  }
}

TEST_CASE("adaptive Simpson integrates known functions") {
  CHECK_THAT(math::integrate([](double t) { return t * t; }, 0.0, 1.0), WithinAbs(1.0 / 3, 1e-12));
  CHECK_THAT(math::integrate([](double t) { return std::exp(-t); }, 0.0, 30.0),
             WithinAbs(1.0, 1e-9));
  // reversed bounds carry the sign
  CHECK_THAT(math::integrate([](double t) { return t; }, 1.0, 0.0), WithinAbs(-0.5, 1e-12));
}

TEST_CASE("Gauss-Hermite rule has exact low moments") {
  const auto rule = math::gauss_hermite(61);
  double w_sum = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    w_sum += rule.weights[i];
    m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
  }
  CHECK_THAT(w_sum, WithinAbs(math::sqrt_pi, 1e-12));
  CHECK_THAT(m2, WithinAbs(math::sqrt_pi / 2.0, 1e-11));
  CHECK(rule.nodes[30] == 0.0);
}

TEST_CASE("logit-normal mean: quadrature against oracle values") {
  // sigma = 0 collapses to invlogit(mu)
  CHECK_THAT(math::logit_normal_mean(1.3, 0.0), WithinAbs(math::invlogit(1.3), 1e-15));
  // mu = 0 is symmetric around 1/2 for any sigma
  CHECK_THAT(math::logit_normal_mean(0.0, 2.7), WithinAbs(0.5, 1e-12));
  // high-resolution quadrature oracle value
  CHECK_THAT(math::logit_normal_mean(1.0, 1.0), WithinAbs(0.69673467014368, 1e-9));
}

TEST_CASE("bivariate normal CDF matches references") {
  CHECK_THAT(math::bvn_cdf(0.0, 0.0, 0.6), WithinAbs(0.352416382349567, 1e-10));
  CHECK_THAT(math::bvn_cdf(1.0, -0.5, 0.35), WithinAbs(0.286626278328534, 1e-10));
  CHECK_THAT(math::bvn_cdf(0.5, 0.5, 0.99), WithinAbs(0.671586868358572, 1e-9));
  CHECK_THAT(math::bvn_cdf(-1.2, 2.3, -0.8), WithinAbs(0.105177044562771, 1e-10));
  CHECK_THAT(math::bvn_cdf(2.0, 2.0, 0.925), WithinAbs(0.969065606690222, 1e-10));
  // independence factorizes
  CHECK_THAT(math::bvn_cdf(0.7, -0.3, 0.0), WithinAbs(math::Phi(0.7) * math::Phi(-0.3), 1e-14));
}

TEST_CASE("dual arithmetic propagates derivatives") {
  using D2 = Dual<2>;
  const D2 x = D2::seeded(1.2, 0);
  const D2 y = D2::seeded(-0.7, 1);
  const D2 f = exp(x * y) + x / (1.0 + y * y);
  const double h = 1e-7;
  const auto fd = [](double xv, double yv) {
    return std::exp(xv * yv) + xv / (1.0 + yv * yv);
  };
  CHECK_THAT(f.val, WithinAbs(fd(1.2, -0.7), 1e-14));
  CHECK_THAT(f.der[0], WithinAbs((fd(1.2 + h, -0.7) - fd(1.2 - h, -0.7)) / (2 * h), 1e-6));
  CHECK_THAT(f.der[1], WithinAbs((fd(1.2, -0.7 + h) - fd(1.2, -0.7 - h)) / (2 * h), 1e-6));
}

TEST_CASE("log1pexp and binomial pmf are stable at extreme logits") {
  CHECK(std::isfinite(math::binom_lpmf_logit(3, 10, 800.0)));
  CHECK(std::isfinite(math::binom_lpmf_logit(3, 10, -800.0)));
  CHECK_THAT(math::binom_lpmf_logit(5, 10, 0.0),
             WithinAbs(math::lchoose(10, 5) - 10 * std::log(2.0), 1e-12));
}

TEST_CASE("counter RNG is block-addressable and reproducible") {
  PhiloxRng a(42, 0), b(42, 0), c(42, 1);
  a.set_block(7);
  b.set_block(7);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u32() == b.next_u32());
  // different stream gives a different sequence
  c.set_block(7);
  int same = 0;
  a.set_block(7);
  for (int i = 0; i < 16; ++i) same += a.next_u32() == c.next_u32();
  CHECK(same < 4);
  // block reset replays regardless of how much the other block consumed
  a.set_block(9);
  const double u1 = a.uniform();
  a.set_block(10);
  (void)a.uniform();
  a.set_block(9);
  CHECK(a.uniform() == u1);
}

TEST_CASE("counter RNG uniforms and normals look sane") {
  PhiloxRng r(123, 0);
  r.set_block(1);
  const int n = 20000;
  double mean_u = 0.0, mean_z = 0.0, var_z = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_u += r.uniform();
    const double z = r.normal();
    mean_z += z;
    var_z += z * z;
  }
  mean_u /= n;
  mean_z /= n;
  var_z /= n;
  CHECK_THAT(mean_u, WithinAbs(0.5, 0.01));
  CHECK_THAT(mean_z, WithinAbs(0.0, 0.03));
  CHECK_THAT(var_z, WithinAbs(1.0, 0.05));
}

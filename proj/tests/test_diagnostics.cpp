// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "dtameta/diagnostics.hpp"
#include "dtameta/rng.hpp"

using namespace dtameta;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("split Rhat: hand-computed example") {
  // halves [1,2] [3,4] [3,4] [5,6]: W = 0.5, B = 2 * var{1.5,3.5,3.5,5.5}
  const ScalarChainSet s{{{1, 2, 3, 4}, {3, 4, 5, 6}}};
  const auto r = split_rhat(s);
  CHECK_FALSE(r.degenerate);
  CHECK_THAT(r.value, WithinAbs(std::sqrt(2.9166666666666666 / 0.5), 1e-12));
  CHECK_THAT(r.value, WithinAbs(2.4152, 5e-5));
}

TEST_CASE("split Rhat: degenerate and divergent cases") {
  const auto constant = split_rhat(ScalarChainSet{{{2, 2, 2, 2}, {2, 2, 2, 2}}});
  CHECK(constant.degenerate);
  CHECK(constant.value == 1.0);
  // zero within-half variance but different half means -> +inf
  const auto flat_halves = split_rhat(ScalarChainSet{{{1, 1, 2, 2}, {3, 3, 4, 4}}});
  CHECK(std::isinf(flat_halves.value));
  CHECK_THROWS_AS(split_rhat(ScalarChainSet{{{1, 2, 3}, {1, 2, 3}}}), std::invalid_argument);
}

TEST_CASE("split Rhat: same-distribution chains give Rhat near 1") {
  PhiloxRng rng(88, 0);
  ScalarChainSet s;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> chain(4000);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      rng.set_block(c * 100000 + i);
      chain[i] = rng.normal();
    }
    s.chains.push_back(std::move(chain));
  }
  const auto r = split_rhat(s);
  CHECK(r.value >= 0.99);
  CHECK(r.value <= 1.01);
}

TEST_CASE("split Rhat is affine invariant") {
  PhiloxRng rng(21, 0);
  rng.set_block(1);
  ScalarChainSet s;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> chain(200);
    for (auto& v : chain) v = rng.normal() + 0.3 * c;
    s.chains.push_back(std::move(chain));
  }
  ScalarChainSet t = s;
  for (auto& chain : t.chains) {
    for (auto& v : chain) v = -4.2 * v + 11.0;
  }
  CHECK_THAT(split_rhat(t).value, WithinAbs(split_rhat(s).value, 1e-12));
}

TEST_CASE("ESS: white noise is close to the draw count") {
  PhiloxRng rng(7, 0);
  ScalarChainSet s;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> chain(1000);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      rng.set_block(c * 100000 + i);
      chain[i] = rng.normal();
    }
    s.chains.push_back(std::move(chain));
  }
  const auto e = ess(s);
  CHECK_FALSE(e.degenerate);
  CHECK_THAT(e.value, WithinRel(3000.0, 0.1));
}

TEST_CASE("ESS: AR(1) chains match the theoretical autocorrelation discount") {
  const double phi = 0.9;
  PhiloxRng rng(99, 0);
  ScalarChainSet s;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> chain(8000);
    double x = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      rng.set_block(c * 1000000 + i);
      x = phi * x + std::sqrt(1.0 - phi * phi) * rng.normal();
      chain[i] = x;
    }
    s.chains.push_back(std::move(chain));
  }
  const double expected = 3 * 8000 * (1.0 - phi) / (1.0 + phi);
  CHECK_THAT(ess(s).value, WithinRel(expected, 0.2));
}

TEST_CASE("ESS preconditions and degenerate series") {
  CHECK_THROWS_AS(ess(ScalarChainSet{{{1, 2, 3, 4, 5, 6, 7}}}), std::invalid_argument);
  const auto e = ess(ScalarChainSet{{std::vector<double>(100, 3.3)}});
  CHECK(e.degenerate);
  CHECK(e.value == 100.0);
}

TEST_CASE("ESS is bounded and positive; chain order does not matter") {
  PhiloxRng rng(13, 0);
  rng.set_block(4);
  ScalarChainSet s;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> chain(600);
    for (auto& v : chain) v = rng.normal();
    s.chains.push_back(std::move(chain));
  }
  const auto e = ess(s);
  CHECK(e.value > 0.0);
  CHECK(e.value <= 3 * 600 * 1.35);  // antithetic tolerance
  ScalarChainSet perm;
  perm.chains = {s.chains[2], s.chains[0], s.chains[1]};
  CHECK_THAT(ess(perm).value, WithinAbs(e.value, 1e-9));
  CHECK_THAT(split_rhat(perm).value, WithinAbs(split_rhat(s).value, 1e-12));
  CHECK_THAT(mcse(perm).value, WithinAbs(mcse(s).value, 1e-12));
}

TEST_CASE("MCSE: white noise with unit SD") {
  PhiloxRng rng(55, 0);
  ScalarChainSet s;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> chain(5000);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      rng.set_block(c * 100000 + i);
      chain[i] = rng.normal();
    }
    s.chains.push_back(std::move(chain));
  }
  // SD ~ 1, ESS ~ 10000 -> MCSE ~ 0.01
  CHECK_THAT(mcse(s).value, WithinRel(0.01, 0.15));
  // and it reproduces sd/sqrt(ess) exactly
  std::vector<double> pooled;
  for (const auto& c : s.chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double sd = std::sqrt(math::variance(pooled));
  CHECK_THAT(mcse(s).value, WithinAbs(sd / std::sqrt(ess(s).value), 1e-12));
}

TEST_CASE("MCSE: constant series is 0 with a degeneracy flag") {
  const auto r = mcse(ScalarChainSet{{std::vector<double>(50, 1.0)}});
  CHECK(r.degenerate);
  CHECK(r.value == 0.0);
}

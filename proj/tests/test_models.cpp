// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "dtameta/fit.hpp"
#include "dtameta/models.hpp"
#include "dtameta/rng.hpp"
#include "support/targets.hpp"

using namespace dtameta;
using Catch::Matchers::WithinAbs;

namespace {

ModelSpec telomerase_spec(CopulaFamily f, std::optional<double> fixed = std::nullopt) {
  const Dataset d = builtin_dataset("telomerase");
  ModelSpec s = ModelSpec::copula_model(f, design_matrix(d, Formula::parse("intercept")));
  s.fixed_assoc = fixed;
  return s;
}

/// Two artificial studies used to pin the between-study layer examples.
Dataset tiny_dataset() {
  StudyRecord a{"a", 3, 10, 4, 12, {}};
  StudyRecord b{"b", 5, 9, 6, 8, {}};
  return Dataset::from_records({a, b}, {});
}

std::vector<double> zero_vector(const Posterior& p) {
  return std::vector<double>(p.dim(), 0.0);
}

}  // namespace

TEST_CASE("parameter layout dimensions and names") {
  const Dataset telo = builtin_dataset("telomerase");
  {
    Posterior p(telomerase_spec(CopulaFamily::gauss), telo);
    CHECK(p.dim() == 5 + 20);  // 5 coefficient blocks of width 1 + 2n latents
    const auto names = p.layout().names(p.spec());
    CHECK(names[0] == "B1[(Intercept)]");
    CHECK(names[4] == "D[(Intercept)]");
    CHECK(names[5] == "logitp1[1]");
  }
  {
    Posterior p(telomerase_spec(CopulaFamily::fgm, 0.0), telo);
    CHECK(p.dim() == 4 + 20);  // association block removed when pinned
  }
  {
    Posterior p(ModelSpec::brma_model(telo.size()), telo);
    CHECK(p.dim() == 5 + 20);
    CHECK(p.layout().names(p.spec())[4] == "etarho");
  }
  {
    const Dataset ascus = builtin_dataset("ascus");
    ModelSpec s = ModelSpec::copula_model(
        CopulaFamily::fgm, design_matrix(ascus, Formula::parse("cellmeans:Test")));
    Posterior p(s, ascus);
    CHECK(p.dim() == 5 * 2 + 40);
  }
  // wrong-length vector
  Posterior p(telomerase_spec(CopulaFamily::gauss), telo);
  std::vector<double> bad(3, 0.0);
  CHECK_THROWS_AS(p.log_posterior(bad), layout_error);
}

TEST_CASE("log likelihood pinned binomial values") {
  const Dataset telo = builtin_dataset("telomerase");
  Posterior p(telomerase_spec(CopulaFamily::gauss), telo);
  auto x = zero_vector(p);
  const auto& lay = p.layout();

  // all latents at logit(1/2): each study contributes lchoose - n log 2
  double expected = 0.0;
  for (const auto& r : telo.records) {
    expected += math::lchoose(r.n_diseased, r.tp) - r.n_diseased * std::log(2.0);
    expected += math::lchoose(r.n_healthy, r.tn) - r.n_healthy * std::log(2.0);
  }
  CHECK_THAT(p.log_likelihood(x), WithinAbs(expected, 1e-10));

  // study 1 at its MLE pi = 25/33: contribution log C(33,25) + 25 log(25/33) + 8 log(8/33)
  x[lay.l1(0)] = math::logit(25.0 / 33.0);
  const double mle_term = math::lchoose(33, 25) + 25 * std::log(25.0 / 33.0) +
                          8 * std::log(8.0 / 33.0);
  const double base_term = math::lchoose(33, 25) - 33 * std::log(2.0);
  CHECK_THAT(p.log_likelihood(x) - expected, WithinAbs(mle_term - base_term, 1e-10));

  // certain success: tp = n_diseased with pi -> 1 contributes ~ 0
  const double c1 = math::binom_lpmf_logit(2, 2, 40.0);
  CHECK_THAT(c1, WithinAbs(0.0, 1e-15));
}

TEST_CASE("random-effects density pinned examples") {
  const Dataset tiny = tiny_dataset();

  SECTION("independence with uniform margins is flat") {
    // mu = 1/2, psi = 2 gives alpha = beta = 1; fgm with t = 0 pins theta = 0
    ModelSpec spec = ModelSpec::copula_model(
        CopulaFamily::fgm, design_matrix(tiny, Formula::parse("intercept")));
    spec.fixed_assoc = 0.0;
    Posterior p(spec, tiny);
    auto x = zero_vector(p);
    const auto& lay = p.layout();
    x[lay.c1(0)] = std::log(2.0);
    x[lay.c2(0)] = std::log(2.0);
    x[lay.l1(0)] = math::logit(0.31);
    x[lay.l2(0)] = math::logit(0.87);
    x[lay.l1(1)] = math::logit(0.5);
    x[lay.l2(1)] = math::logit(0.66);
    CHECK_THAT(p.log_random_effects_density(x), WithinAbs(0.0, 1e-10));
  }

  SECTION("gauss rho=0, Beta(2,2) margins at 1/2") {
    ModelSpec spec = ModelSpec::copula_model(
        CopulaFamily::gauss, design_matrix(tiny, Formula::parse("intercept")));
    spec.fixed_assoc = 0.0;
    Posterior p(spec, tiny);
    auto x = zero_vector(p);
    const auto& lay = p.layout();
    x[lay.c1(0)] = std::log(4.0);  // psi = 4, mu = 1/2 -> alpha = beta = 2
    x[lay.c2(0)] = std::log(4.0);
    // both studies, both margins at pi = 1/2: Beta(2,2) density there is 1.5
    CHECK_THAT(p.log_random_effects_density(x), WithinAbs(4.0 * std::log(1.5), 1e-10));
  }

  SECTION("fgm theta=0.5, uniform margins at (0.9, 0.9)") {
    ModelSpec spec = ModelSpec::copula_model(
        CopulaFamily::fgm, design_matrix(tiny, Formula::parse("intercept")));
    spec.fixed_assoc = std::atanh(0.5);
    Posterior p(spec, tiny);
    auto x = zero_vector(p);
    const auto& lay = p.layout();
    x[lay.c1(0)] = std::log(2.0);
    x[lay.c2(0)] = std::log(2.0);
    x[lay.l1(0)] = math::logit(0.9);
    x[lay.l2(0)] = math::logit(0.9);
    // study 2 sits at (0.5, 0.5) where the fgm density is exactly 1
    CHECK_THAT(p.log_random_effects_density(x), WithinAbs(std::log(1.32), 1e-10));
  }
}

TEST_CASE("independence factorizes the latent density") {
  const Dataset telo = builtin_dataset("telomerase");
  for (CopulaFamily f : {CopulaFamily::gauss, CopulaFamily::fgm}) {
    ModelSpec spec = telomerase_spec(f, 0.0);  // tanh(0) = 0 for both families
    Posterior p(spec, telo);
    PhiloxRng rng(5, 0);
    rng.set_block(1);
    auto x = zero_vector(p);
    for (auto& v : x) v = rng.normal() * 0.5;
    // with the copula term dead, the density is the two beta margins alone
    double beta_sum = 0.0;
    const auto& lay = p.layout();
    for (std::size_t i = 0; i < telo.size(); ++i) {
      const double mu1 = math::invlogit(x[lay.b1(0)]);
      const double mu2 = math::invlogit(x[lay.b2(0)]);
      const double psi1 = std::exp(x[lay.c1(0)]);
      const double psi2 = std::exp(x[lay.c2(0)]);
      beta_sum += math::beta_lpdf(math::invlogit(x[lay.l1(i)]), mu1 * psi1, (1 - mu1) * psi1);
      beta_sum += math::beta_lpdf(math::invlogit(x[lay.l2(i)]), mu2 * psi2, (1 - mu2) * psi2);
    }
    CAPTURE(to_string(f));
    CHECK_THAT(p.log_random_effects_density(x), WithinAbs(beta_sum, 1e-9));
  }
}

TEST_CASE("log posterior is the sum of its components") {
  const Dataset telo = builtin_dataset("telomerase");
  for (CopulaFamily f :
       {CopulaFamily::gauss, CopulaFamily::frank, CopulaFamily::fgm, CopulaFamily::c90,
        CopulaFamily::c270}) {
    Posterior p(telomerase_spec(f), telo);
    PhiloxRng rng(11, 0);
    rng.set_block(2);
    auto x = zero_vector(p);
    for (auto& v : x) v = rng.normal() * 0.3;
    const double total = p.log_posterior(x);
    const double parts = p.log_likelihood(x) + p.log_random_effects_density(x) +
                         p.latent_jacobian(x) + p.log_prior(x);
    CAPTURE(to_string(f));
    CHECK_THAT(total, WithinAbs(parts, 1e-9));
  }
}

TEST_CASE("log posterior is finite at random draws for every model") {
  const Dataset telo = builtin_dataset("telomerase");
  std::vector<ModelSpec> specs;
  for (CopulaFamily f :
       {CopulaFamily::gauss, CopulaFamily::frank, CopulaFamily::fgm, CopulaFamily::c90,
        CopulaFamily::c270}) {
    specs.push_back(telomerase_spec(f));
  }
  specs.push_back(ModelSpec::brma_model(telo.size()));
  for (const auto& spec : specs) {
    Posterior p(spec, telo);
    PhiloxRng rng(3, 0);
    std::vector<double> g(p.dim());
    for (int rep = 0; rep < 20; ++rep) {
      rng.set_block(rep + 1);
      std::vector<double> x(p.dim());
      for (auto& v : x) v = rng.normal();
      CAPTURE(spec.model_name(), rep);
      const double lp = p.log_posterior(x);
      CHECK(std::isfinite(lp));
      CHECK(std::isfinite(p.log_posterior_grad(x, g)));
    }
  }
}

TEST_CASE("log posterior is invariant to dataset row permutation") {
  const Dataset ascus = builtin_dataset("ascus");
  ModelSpec spec = ModelSpec::copula_model(
      CopulaFamily::frank, design_matrix(ascus, Formula::parse("cellmeans:Test")));
  Posterior p(spec, ascus);
  PhiloxRng rng(17, 0);
  rng.set_block(1);
  std::vector<double> x(p.dim());
  for (auto& v : x) v = rng.normal() * 0.4;

  // reverse the study order, permuting design rows (via the covariates) and
  // the latent blocks identically
  std::vector<StudyRecord> recs(ascus.records.rbegin(), ascus.records.rend());
  const Dataset rev = Dataset::from_records(recs, ascus.covariate_names);
  ModelSpec rev_spec = ModelSpec::copula_model(
      CopulaFamily::frank, design_matrix(rev, Formula::parse("cellmeans:Test")));
  Posterior p_rev(rev_spec, rev);
  std::vector<double> x_rev(x);
  const auto& lay = p.layout();
  const std::size_t n = ascus.size();
  // cell order flips (HC2 first in reversed data), so swap coefficient pairs
  for (std::size_t blk = 0; blk < 5; ++blk) {
    std::swap(x_rev[blk * 2], x_rev[blk * 2 + 1]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    x_rev[p_rev.layout().l1(i)] = x[lay.l1(n - 1 - i)];
    x_rev[p_rev.layout().l2(i)] = x[lay.l2(n - 1 - i)];
  }
  CHECK_THAT(p_rev.log_posterior(x_rev), WithinAbs(p.log_posterior(x), 1e-9));
}

TEST_CASE("gradient matches central finite differences for all six models") {
  const Dataset telo = builtin_dataset("telomerase");
  std::vector<ModelSpec> specs;
  for (CopulaFamily f :
       {CopulaFamily::gauss, CopulaFamily::frank, CopulaFamily::fgm, CopulaFamily::c90,
        CopulaFamily::c270}) {
    specs.push_back(telomerase_spec(f));
  }
  specs.push_back(ModelSpec::brma_model(telo.size()));

  for (const auto& spec : specs) {
    Posterior p(spec, telo);
    PhiloxRng rng(7, 0);
    std::vector<double> grad(p.dim());
    for (int rep = 0; rep < 20; ++rep) {
      rng.set_block(rep + 1);
      std::vector<double> x(p.dim());
      for (auto& v : x) v = rng.normal();
      const double lp = p.log_posterior_grad(x, grad);
      CHECK_THAT(lp, WithinAbs(p.log_posterior(x), 1e-9));
      const auto fd = test_targets::fd_gradient(p, x);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        CAPTURE(spec.model_name(), rep, i, grad[i], fd[i]);
        CHECK(std::fabs(grad[i] - fd[i]) <= 1e-5 * std::max(1.0, std::fabs(fd[i])));
      }
    }
  }
}

TEST_CASE("gradient of quadratic and inert-dimension targets") {
  test_targets::GaussianTarget t{{0.0, 3.0}, {1.0, std::numeric_limits<double>::infinity()}};
  std::vector<double> g(2);
  const std::vector<double> x = {1.7, -2.0};
  t.log_posterior_grad(x, g);
  CHECK_THAT(g[0], WithinAbs(-1.7, 1e-15));  // grad of -x^2/2 is -x
  CHECK(g[1] == 0.0);                        // flat direction: no data, no prior
}

TEST_CASE("BRMA density grows without bound as sigma shrinks at the mode") {
  const Dataset telo = builtin_dataset("telomerase");
  Posterior p(ModelSpec::brma_model(telo.size()), telo);
  auto x = zero_vector(p);
  const auto& lay = p.layout();
  x[lay.mul(0)] = 1.1;
  x[lay.mul(1)] = 1.4;
  for (std::size_t i = 0; i < telo.size(); ++i) {
    x[lay.l1(i)] = 1.1;  // latents pinned at the means
    x[lay.l2(i)] = 1.4;
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (double ls : {0.0, -1.0, -2.0, -3.0, -4.0}) {
    x[lay.log_sigma(0)] = ls;
    x[lay.log_sigma(1)] = ls;
    const double lp = p.log_posterior(x);
    CHECK(lp > prev);
    prev = lp;
  }
}

TEST_CASE("BRMA covariance reconstruction is symmetric positive definite") {
  PhiloxRng rng(23, 0);
  rng.set_block(1);
  for (int rep = 0; rep < 50; ++rep) {
    const double s1 = std::exp(rng.normal());
    const double s2 = std::exp(rng.normal());
    const double rho = std::tanh(rng.normal() * 2.0);
    const double offdiag = s1 * s2 * rho;
    const double det = s1 * s1 * s2 * s2 - offdiag * offdiag;
    CHECK(det > 0.0);
    CHECK(s1 * s1 > 0.0);
  }
}

TEST_CASE("logit Jacobian integrates a uniform prior to 1") {
  const double total = math::integrate(
      [](double t) { return std::exp(math::log_logistic_jacobian(t)); }, -40.0, 40.0, 1e-10);
  CHECK_THAT(total, WithinAbs(1.0, 1e-6));
}

TEST_CASE("BRMA meta-analytic mean") {
  CHECK_THAT(brma_meta_analytic_mean(1.3, -0.4, 0.0, 0.0).first,
             WithinAbs(math::invlogit(1.3), 1e-14));
  CHECK_THAT(brma_meta_analytic_mean(0.0, 0.0, 2.0, 1.0).first, WithinAbs(0.5, 1e-12));
  CHECK_THAT(brma_meta_analytic_mean(1.0, 0.0, 1.0, 1.0).first,
             WithinAbs(0.696734670144, 1e-9));
  CHECK_THROWS_AS(brma_meta_analytic_mean(0.0, 0.0, -1.0, 1.0), domain_error);
}

// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "dtameta/errors.hpp"
#include "dtameta/math.hpp"
#include "dtameta/rng.hpp"

namespace dtameta {

struct ChainConfig {
  int chains = 3;
  int iter = 2000;
  int warmup = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  int max_tree_depth = 10;
  double target_accept = 0.8;

  void validate() const {
    if (chains < 1) throw sampling_error("chains must be >= 1");
    if (warmup < 0 || warmup >= iter) throw sampling_error("need 0 <= warmup < iter");
    if (thin < 1) throw sampling_error("thin must be >= 1");
    if (max_tree_depth < 1 || max_tree_depth > 14)
      throw sampling_error("max_tree_depth must be in [1, 14]");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw sampling_error("target_accept must be in (0, 1)");
  }

  int kept_per_chain() const { return (iter - warmup) / thin; }
};

/// Post-warmup output of one chain, on the unconstrained scale. The
/// constrained view and pointwise log-likelihood matrix are filled in by the
/// model-aware fit layer.
struct ChainDraws {
  int dim = 0;
  int kept = 0;
  std::vector<double> draws;        // kept x dim, row-major
  std::vector<double> accept_stat;  // one entry per post-warmup iteration
  int divergences = 0;
  double step_size = 0.0;
  std::vector<double> inv_metric;

  std::vector<std::string> constrained_names;
  std::vector<double> constrained;  // kept x constrained_names.size()
  std::vector<double> loglik;       // kept x loglik_cols
  int loglik_cols = 0;

  double draw(int s, int j) const { return draws[static_cast<std::size_t>(s) * dim + j]; }
  double cdraw(int s, int j) const {
    return constrained[static_cast<std::size_t>(s) * constrained_names.size() + j];
  }
};

/// One leapfrog update with unit metric: half momentum kick, full position
/// drift, half momentum kick. grad_fn must return the gradient of log p.
template <typename GradFn>
void leapfrog(std::vector<double>& q, std::vector<double>& p, double step, GradFn&& grad_fn) {
  const std::size_t d = q.size();
  std::vector<double> g = grad_fn(q);
  for (std::size_t i = 0; i < d; ++i) p[i] += 0.5 * step * g[i];
  for (std::size_t i = 0; i < d; ++i) q[i] += step * p[i];
  g = grad_fn(q);
  for (std::size_t i = 0; i < d; ++i) p[i] += 0.5 * step * g[i];
}

namespace nuts_detail {

constexpr double divergence_threshold = 1000.0;

struct State {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

/// Nesterov dual averaging of log(step size) toward a target acceptance.
class DualAverage {
 public:
  DualAverage(double eps0, double target)
      : mu_(std::log(10.0 * eps0)), target_(target), log_eps_(std::log(eps0)) {}

  void update(double alpha) {
    if (std::isnan(alpha)) alpha = 0.0;
    ++m_;
    const double w = 1.0 / (m_ + t0_);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - alpha);
    log_eps_ = mu_ - std::sqrt(static_cast<double>(m_)) / gamma_ * h_bar_;
    const double w2 = std::pow(static_cast<double>(m_), -kappa_);
    log_eps_bar_ = w2 * log_eps_ + (1.0 - w2) * log_eps_bar_;
  }

  double eps() const { return std::exp(log_eps_); }
  double eps_bar() const { return m_ == 0 ? std::exp(log_eps_) : std::exp(log_eps_bar_); }

 private:
  double mu_;
  double target_;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double h_bar_ = 0.0;
  long m_ = 0;
  static constexpr double gamma_ = 0.05;
  static constexpr double t0_ = 10.0;
  static constexpr double kappa_ = 0.75;
};

/// Running mean/variance for the diagonal metric windows.
struct Welford {
  std::size_t n = 0;
  std::vector<double> mean, m2;

  explicit Welford(std::size_t d) : mean(d, 0.0), m2(d, 0.0) {}
  void add(std::span<const double> x) {
    ++n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = x[i] - mean[i];
      mean[i] += delta / static_cast<double>(n);
      m2[i] += delta * (x[i] - mean[i]);
    }
  }
  /// Regularized variance estimate, shrunk toward a small identity.
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean.size(), 1.0);
    if (n < 3) return v;
    const double w = static_cast<double>(n) / (n + 5.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = w * (m2[i] / static_cast<double>(n - 1)) + 1e-3 * (1.0 - w);
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) v[i] = 1.0;
    }
    return v;
  }
};

template <typename Target>
class ChainRunner {
 public:
  ChainRunner(const Target& target, const ChainConfig& cfg, int chain_index)
      : target_(target),
        cfg_(cfg),
        dim_(target.dim()),
        rng_(cfg.seed, static_cast<std::uint32_t>(chain_index)),
        inv_metric_(dim_, 1.0) {}

  ChainDraws run() {
    ChainDraws out;
    out.dim = static_cast<int>(dim_);
    out.kept = cfg_.kept_per_chain();
    out.draws.reserve(static_cast<std::size_t>(out.kept) * dim_);

    State z = initialize();
    double eps = find_reasonable_eps(z);
    DualAverage da(eps, cfg_.target_accept);

    // Warmup staging: fast step-size interval, doubling covariance windows,
    // terminal fast interval.
    const int warm = cfg_.warmup;
    const int init_buf = std::min(warm, std::max(1, static_cast<int>(std::lround(0.15 * warm))));
    const int term_buf = std::min(warm - init_buf, std::max(1, static_cast<int>(std::lround(0.10 * warm))));
    const int slow_len = std::max(0, warm - init_buf - term_buf);
    std::vector<int> window_ends;
    if (slow_len > 0) {
      int start = init_buf;
      int width = std::min(25, slow_len);
      while (true) {
        int end = start + width;
        if (end + 2 * width > init_buf + slow_len) end = init_buf + slow_len;
        window_ends.push_back(end);
        if (end >= init_buf + slow_len) break;
        start = end;
        width *= 2;
      }
    }
    std::size_t window_idx = 0;
    Welford welford(dim_);

    int kept = 0;
    for (int it = 1; it <= cfg_.iter; ++it) {
      rng_.set_block(static_cast<std::uint64_t>(it));
      double alpha = 0.0;
      bool divergent = false;
      z = transition(z, eps, alpha, divergent);

      if (it <= warm) {
        da.update(alpha);
        eps = da.eps();
        const bool in_slow = slow_len > 0 && it > init_buf && it <= init_buf + slow_len;
        if (in_slow) {
          welford.add(z.q);
          if (window_idx < window_ends.size() && it == window_ends[window_idx]) {
            inv_metric_ = welford.regularized_variance();
            welford = Welford(dim_);
            ++window_idx;
            eps = find_reasonable_eps(z);
            da = DualAverage(eps, cfg_.target_accept);
          }
        }
        if (it == warm) {
          eps = da.eps_bar();
        }
      } else {
        out.accept_stat.push_back(alpha);
        if (divergent) ++out.divergences;
        const int post = it - warm;
        if (post % cfg_.thin == 0 && kept < out.kept) {
          out.draws.insert(out.draws.end(), z.q.begin(), z.q.end());
          ++kept;
        }
      }
    }
    out.step_size = eps;
    out.inv_metric = inv_metric_;
    return out;
  }

 private:
  State make_state(std::vector<double> q) const {
    State z;
    z.q = std::move(q);
    z.p.assign(dim_, 0.0);
    z.grad.assign(dim_, 0.0);
    z.logp = target_.log_posterior_grad(z.q, z.grad);
    return z;
  }

  State initialize() {
    rng_.set_block(0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<double> q(dim_);
      for (auto& qi : q) qi = rng_.uniform(-2.0, 2.0);
      State z = make_state(std::move(q));
      bool ok = std::isfinite(z.logp);
      for (std::size_t i = 0; ok && i < dim_; ++i) ok = std::isfinite(z.grad[i]);
      if (ok) return z;
    }
    throw sampling_error("initialization failed: log posterior not finite in 100 attempts");
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) k += inv_metric_[i] * p[i] * p[i];
    return 0.5 * k;
  }

  void sample_momentum(State& z) {
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
  }

  /// Leapfrog with the diagonal metric; returns false on non-finite results.
  bool leapfrog_step(State& z, double step) const {
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * step * z.grad[i];
    for (std::size_t i = 0; i < dim_; ++i) z.q[i] += step * inv_metric_[i] * z.p[i];
    z.logp = target_.log_posterior_grad(z.q, z.grad);
    if (!std::isfinite(z.logp)) return false;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (!std::isfinite(z.grad[i])) return false;
      z.p[i] += 0.5 * step * z.grad[i];
    }
    return true;
  }

  double find_reasonable_eps(const State& z0) {
    double eps = 1.0;
    State z = z0;
    sample_momentum(z);
    const State start = z;
    const double h0 = -z.logp + kinetic(z.p);
    const auto delta_h = [&](double e) {
      State trial = start;
      if (!leapfrog_step(trial, e)) return std::numeric_limits<double>::infinity();
      return -trial.logp + kinetic(trial.p) - h0;
    };
    double dh = delta_h(eps);
    int guard = 0;
    while (std::isinf(dh) && guard++ < 60) {
      eps *= 0.5;
      dh = delta_h(eps);
    }
    const double dir = dh < -std::log(0.5) ? 1.0 : -1.0;  // accept prob > 0.5 -> grow
    guard = 0;
    while (guard++ < 60) {
      const double next = dir > 0 ? eps * 2.0 : eps * 0.5;
      const double dh_next = delta_h(next);
      const bool still = dir > 0 ? dh_next < -std::log(0.5) : dh_next > -std::log(0.5);
      if (!still || next < 1e-10 || next > 1e7) break;
      eps = next;
      dh = dh_next;
    }
    return std::clamp(eps, 1e-10, 1e7);
  }

  bool uturn(const std::vector<double>& p_left, const std::vector<double>& p_right,
             const std::vector<double>& rho) const {
    double dot_l = 0.0, dot_r = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      dot_l += inv_metric_[i] * p_left[i] * rho[i];
      dot_r += inv_metric_[i] * p_right[i] * rho[i];
    }
    return dot_l <= 0.0 || dot_r <= 0.0;
  }

  struct Subtree {
    State left, right, prop;
    std::vector<double> rho;
    double log_w = 0.0;
    double sum_alpha = 0.0;
    int n_alpha = 0;
    bool divergent = false;
    bool turning = false;
  };

  Subtree build_tree(int depth, const State& from, int dir, double eps, double h0) {
    if (depth == 0) {
      Subtree t;
      t.left = from;
      const bool ok = leapfrog_step(t.left, dir * eps);
      const double h = ok ? -t.left.logp + kinetic(t.left.p)
                          : std::numeric_limits<double>::infinity();
      double dh = h - h0;
      if (std::isnan(dh)) dh = std::numeric_limits<double>::infinity();
      t.sum_alpha = dh < 0.0 ? 1.0 : std::exp(-dh);
      t.n_alpha = 1;
      t.divergent = dh > divergence_threshold;
      t.log_w = -dh;
      t.right = t.left;
      t.prop = t.left;
      t.rho = t.left.p;
      return t;
    }
    Subtree t1 = build_tree(depth - 1, from, dir, eps, h0);
    if (t1.divergent || t1.turning) return t1;
    Subtree t2 = build_tree(depth - 1, dir > 0 ? t1.right : t1.left, dir, eps, h0);
    t2.sum_alpha += t1.sum_alpha;
    t2.n_alpha += t1.n_alpha;
    if (t2.divergent || t2.turning) return t2;

    Subtree merged;
    merged.sum_alpha = t2.sum_alpha;
    merged.n_alpha = t2.n_alpha;
    merged.log_w = math::logsumexp(std::array{t1.log_w, t2.log_w});
    // multinomial choice between the two halves
    const double logu = std::log(rng_.uniform());
    merged.prop = (logu < t2.log_w - merged.log_w) ? t2.prop : t1.prop;
    merged.left = dir > 0 ? t1.left : t2.left;
    merged.right = dir > 0 ? t2.right : t1.right;
    merged.rho = t1.rho;
    for (std::size_t i = 0; i < dim_; ++i) merged.rho[i] += t2.rho[i];
    merged.turning = uturn(merged.left.p, merged.right.p, merged.rho);
    return merged;
  }

  State transition(State z, double eps, double& accept_stat, bool& divergent) {
    sample_momentum(z);
    const double h0 = -z.logp + kinetic(z.p);
    const State z0 = z;

    State left = z, right = z, prop = z;
    std::vector<double> rho = z.p;
    double log_w = 0.0;
    double sum_alpha = 0.0;
    int n_alpha = 0;

    for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
      const int dir = rng_.uniform() < 0.5 ? -1 : 1;
      Subtree sub = build_tree(depth, dir > 0 ? right : left, dir, eps, h0);
      sum_alpha += sub.sum_alpha;
      n_alpha += sub.n_alpha;
      if (sub.divergent) {
        // reject the whole trajectory: the draw stays at the start point
        divergent = true;
        prop = z0;
        break;
      }
      if (sub.turning) break;
      // biased progressive sampling favors the fresh half of the trajectory
      if (std::log(rng_.uniform()) < sub.log_w - log_w) prop = sub.prop;
      log_w = math::logsumexp(std::array{log_w, sub.log_w});
      if (dir > 0) {
        right = sub.right;
      } else {
        left = sub.left;
      }
      for (std::size_t i = 0; i < dim_; ++i) rho[i] += sub.rho[i];
      if (uturn(left.p, right.p, rho)) break;
    }
    accept_stat = n_alpha > 0 ? sum_alpha / n_alpha : 0.0;
    return prop;
  }

  const Target& target_;
  ChainConfig cfg_;
  std::size_t dim_;
  PhiloxRng rng_;
  std::vector<double> inv_metric_;
};

}  // namespace nuts_detail

/// Run one NUTS chain (multinomial No-U-Turn, diagonal metric, dual-averaged
/// step size). Deterministic in (target, config, chain_index).
template <typename Target>
ChainDraws run_nuts_chain(const Target& target, const ChainConfig& cfg, int chain_index) {
  cfg.validate();
  nuts_detail::ChainRunner<Target> runner(target, cfg, chain_index);
  return runner.run();
}

/// Run all configured chains. Chains share nothing mutable, so the parallel
/// and serial paths produce identical output.
template <typename Target>
std::vector<ChainDraws> run_nuts(const Target& target, const ChainConfig& cfg,
                                 bool parallel = true) {
  cfg.validate();
  std::vector<ChainDraws> out(cfg.chains);
  if (!parallel || cfg.chains == 1) {
    for (int c = 0; c < cfg.chains; ++c) out[c] = run_nuts_chain(target, cfg, c);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(cfg.chains);
  threads.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    threads.emplace_back([&, c]() {
      try {
        out[c] = run_nuts_chain(target, cfg, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Plain fixed-length HMC transition kernel, kept for debugging comparisons.
template <typename Target>
std::vector<double> hmc_fixed_step(const Target& target, std::vector<double> q, double eps,
                                   int n_leapfrog, PhiloxRng& rng, bool& accepted) {
  const std::size_t d = q.size();
  std::vector<double> grad(d);
  double logp = target.log_posterior_grad(q, grad);
  std::vector<double> p(d);
  for (auto& pi : p) pi = rng.normal();
  double k0 = 0.0;
  for (double pi : p) k0 += 0.5 * pi * pi;
  const double h0 = -logp + k0;

  std::vector<double> qn = q;
  for (int s = 0; s < n_leapfrog; ++s) {
    for (std::size_t i = 0; i < d; ++i) p[i] += 0.5 * eps * grad[i];
    for (std::size_t i = 0; i < d; ++i) qn[i] += eps * p[i];
    logp = target.log_posterior_grad(qn, grad);
    if (!std::isfinite(logp)) {
      accepted = false;
      return q;
    }
    for (std::size_t i = 0; i < d; ++i) p[i] += 0.5 * eps * grad[i];
  }
  double k1 = 0.0;
  for (double pi : p) k1 += 0.5 * pi * pi;
  const double h1 = -logp + k1;
  accepted = std::log(rng.uniform()) < h0 - h1;
  return accepted ? qn : q;
}

}  // namespace dtameta

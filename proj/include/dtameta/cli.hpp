// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "dtameta/bundle.hpp"
#include "dtameta/fit.hpp"
#include "dtameta/plots.hpp"
#include "dtameta/summaries.hpp"

namespace dtameta::cli {

// exit codes: 0 ok, 2 usage, 3 data, 4 sampling, 5 internal
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_data = 3;
inline constexpr int exit_sampling = 4;
inline constexpr int exit_internal = 5;

namespace cli_detail {

inline std::string formula_display(const Formula& f, const std::string& lhs) {
  if (f.coding == Coding::intercept) return lhs + " ~ 1";
  return lhs + " ~ " + f.covariate + " + 0";
}

inline std::string param_label(const FitSummary& s, const ParamSummary& p) {
  const auto cell_of = [&](const std::string& prefix) -> std::string {
    const std::size_t idx =
        std::stoul(p.name.substr(prefix.size(), p.name.size() - prefix.size() - 1));
    if (s.cells.size() > 1 && idx - 1 < s.cells.size()) return " (" + s.cells[idx - 1] + ")";
    return "";
  };
  if (p.name.rfind("MUse[", 0) == 0) return "Sensitivity" + cell_of("MUse[");
  if (p.name.rfind("MUsp[", 0) == 0) return "Specificity" + cell_of("MUsp[");
  if (p.name.rfind("ktau[", 0) == 0) return "Correlation" + cell_of("ktau[");
  if (p.name.rfind("theta[", 0) == 0) return "Assoc. param" + cell_of("theta[");
  if (p.name == "MU[1]") return "Sensitivity";
  if (p.name == "MU[2]") return "Specificity";
  if (p.name == "mu[1]") return "Sens (central)";
  if (p.name == "mu[2]") return "Spec (central)";
  if (p.name == "rho") return "Pearson corr.";
  if (p.name == "ktau") return "Correlation";
  return "";
}

/// Reference-style summary block printed by `fit`.
inline void print_summary_block(const FitSummary& s) {
  std::printf("Posterior marginal mean sensitivity and specificity\nwith 95%% credible intervals\n\n");
  std::printf("%10s %-18s %8s %8s %8s %7s %6s\n", "", "Parameter", "Mean", "Lower", "Upper",
              "n_eff", "Rhat");
  for (const auto& p : s.params) {
    if (p.role != "pooled") continue;
    std::printf("%10s %-18s %8.4f %8.4f %8.4f %7.1f %6.4f\n", p.name.c_str(),
                param_label(s, p).c_str(), p.mean, p.lower, p.upper, p.n_eff, p.rhat);
  }
  std::printf("\nModel characteristics\n\n");
  if (s.model == "brma") {
    std::printf("Model: bivariate normal random effects (BRMA), sampling algorithm: NUTS(diag)\n\n");
  } else {
    std::printf("Copula function: %s, sampling algorithm: NUTS(diag)\n\n", s.model.c_str());
  }
  const Formula f = Formula::parse(s.formula);
  std::printf("Formula(1): %s\n", formula_display(f, "MUse").c_str());
  std::printf("Formula(2): %s\n", formula_display(f, "MUsp").c_str());
  std::printf("Formula(3): %s\n", formula_display(f, "Omega").c_str());
  std::printf("%d chain(s) each with iter=%d; warm-up=%d; thin=%d.\n", s.config.chains,
              s.config.iter, s.config.warmup, s.config.thin);
  std::printf("post-warmup draws per chain=%d; total post-warmup draws=%d.\n",
              s.config.kept_per_chain(), s.total_draws);
  std::printf("divergent transitions after warmup: %d\n", s.divergences);
  std::printf("\nPredictive accuracy of the model\n\n");
  std::printf("Log point-wise predictive density (LPPD): %.4f\n", s.waic.lppd);
  std::printf("Effective number of parameters: %.4f\n", s.waic.p_waic);
  std::printf("Watanabe-Akaike information Criterion (WAIC): %.4f\n", s.waic.waic);
}

inline std::string default_out_dir(const std::string& model, const std::string& dataset) {
  const char* env = std::getenv("DTAMETA_OUT_DIR");
  const std::string base = env != nullptr ? env : ".";
  return base + "/" + model + "_" + dataset + "_fit";
}

struct FitArgs {
  std::string copula;
  std::string data_path;
  std::string builtin;
  std::string sid = "ID";
  std::string format = "dis_nondis";
  std::string formula = "intercept";
  std::string out;
  std::string raw_draws;
  ChainConfig config;
};

inline int run_fit(const FitArgs& a) {
  if (a.data_path.empty() == a.builtin.empty()) {
    throw usage_error("exactly one of --data or --builtin is required");
  }
  const Formula formula = Formula::parse(a.formula);
  Dataset data;
  std::string source;
  if (!a.builtin.empty()) {
    data = builtin_dataset(a.builtin);
    source = "builtin:" + a.builtin;
  } else {
    std::vector<std::string> covariates;
    if (formula.coding == Coding::cell_means) covariates.push_back(formula.covariate);
    data = load_csv(a.data_path, csv_format_from_string(a.format), a.sid, covariates);
    source = "file:" + a.data_path;
  }

  ModelSpec spec;
  if (a.copula == "brma") {
    if (formula.coding != Coding::intercept)
      throw usage_error("the brma model supports only --formula intercept");
    spec = ModelSpec::brma_model(data.size());
  } else {
    spec = ModelSpec::copula_model(copula_family_from_string(a.copula),
                                   design_matrix(data, formula));
  }

  const std::string dataset_label = !a.builtin.empty()
                                        ? a.builtin
                                        : std::filesystem::path(a.data_path).stem().string();
  const std::string out_dir =
      a.out.empty() ? default_out_dir(spec.model_name(), dataset_label) : a.out;

  FitResult fit = run_chains(spec, data, a.config);
  const FitSummary summary = summarize(fit);

  RunManifest manifest;
  manifest.subcommand = "fit";
  manifest.dataset_source = source;
  manifest.sid_column = a.sid;
  manifest.csv_format = a.builtin.empty() ? a.format : "";
  manifest.model = spec.model_name();
  manifest.formula = formula.str();
  manifest.config = a.config;
  manifest.out_dir = out_dir;
  write_bundle(out_dir, manifest, fit, summary);
  if (!a.raw_draws.empty()) {
    bundle_detail::write_file(a.raw_draws, unconstrained_draws_to_csv(fit));
  }

  print_summary_block(summary);
  std::printf("\nbundle written to %s\n", out_dir.c_str());
  return exit_ok;
}

inline int run_plot(const std::string& bundle_dir, const std::string& kind,
                    std::string out_file) {
  const FitSummary summary = read_summary(bundle_dir);
  if (out_file.empty()) out_file = bundle_dir + "/" + kind + ".svg";
  std::string svg;
  if (kind == "forest") {
    const Dataset data = read_bundle_dataset(bundle_dir);
    svg = forest_svg(summary, data);
  } else if (kind == "trace") {
    const BundleDraws draws = read_bundle_draws(bundle_dir);
    std::vector<TraceSeries> series;
    for (std::size_t j = 0; j < draws.names.size(); ++j) {
      const auto& name = draws.names[j];
      if (name.rfind("p1[", 0) == 0 || name.rfind("p2[", 0) == 0) continue;
      TraceSeries ts;
      ts.name = name;
      for (const auto& chain : draws.values) {
        std::vector<double> series_c(chain.size());
        for (std::size_t s = 0; s < chain.size(); ++s) series_c[s] = chain[s][j];
        ts.chains.push_back(std::move(series_c));
      }
      series.push_back(std::move(ts));
    }
    svg = trace_svg(series);
  } else {
    throw usage_error("plot kind must be forest or trace");
  }
  bundle_detail::write_file(out_file, svg);
  std::printf("%s\n", out_file.c_str());
  return exit_ok;
}

inline int run_compare(const std::vector<std::string>& bundle_dirs, const std::string& out_file) {
  if (bundle_dirs.size() < 2) throw usage_error("compare needs at least 2 bundles");
  std::vector<FitSummary> fits;
  for (const auto& dir : bundle_dirs) fits.push_back(read_summary(dir));
  const auto rows = compare(fits);

  std::string csv = "model,parameter,mean,lower,upper,n_eff,rhat,waic\n";
  for (const auto& r : rows) {
    csv += r.model + "," + bundle_detail::csv_quote(r.parameter) + "," +
           bundle_detail::format_double(r.mean) + "," + bundle_detail::format_double(r.lower) +
           "," + bundle_detail::format_double(r.upper) + "," +
           bundle_detail::format_double(r.n_eff) + "," + bundle_detail::format_double(r.rhat) +
           "," + bundle_detail::format_double(r.waic) + "\n";
  }
  if (!out_file.empty()) bundle_detail::write_file(out_file, csv);

  std::printf("%-8s %-12s %9s %9s %9s %8s %7s %10s\n", "Model", "Parameter", "Mean", "Lower",
              "Upper", "n_eff", "Rhat", "WAIC");
  for (const auto& r : rows) {
    std::printf("%-8s %-12s %9.4f %9.4f %9.4f %8.1f %7.4f %10.4f\n", r.model.c_str(),
                r.parameter.c_str(), r.mean, r.lower, r.upper, r.n_eff, r.rhat, r.waic);
  }
  return exit_ok;
}

}  // namespace cli_detail

/// Entry point used by the binary and by in-process tests.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Bayesian meta-analysis of diagnostic test accuracy with "
               "copula bivariate beta-binomial and BRMA models"};
  app.require_subcommand(1);

  cli_detail::FitArgs fa;
  CLI::App* fit = app.add_subcommand("fit", "fit a model and write a result bundle");
  fit->add_option("--copula", fa.copula, "model: gauss|fgm|c90|c270|frank|brma")->required();
  fit->add_option("--data", fa.data_path, "CSV file with study counts");
  fit->add_option("--builtin", fa.builtin, "builtin dataset: telomerase|ascus");
  fit->add_option("--sid", fa.sid, "study id column (default ID)");
  fit->add_option("--format", fa.format, "CSV layout: dis_nondis|tp_fp_tn_fn");
  fit->add_option("--formula", fa.formula, "intercept | cellmeans:COV");
  fit->add_option("--iter", fa.config.iter, "iterations per chain");
  fit->add_option("--warmup", fa.config.warmup, "warmup iterations");
  fit->add_option("--thin", fa.config.thin, "post-warmup thinning stride");
  fit->add_option("--chains", fa.config.chains, "number of chains");
  fit->add_option("--seed", fa.config.seed, "RNG seed");
  fit->add_option("--max-depth", fa.config.max_tree_depth, "NUTS maximum tree depth");
  fit->add_option("--target-accept", fa.config.target_accept, "step-size adaptation target");
  fit->add_option("--out", fa.out, "output bundle directory");
  fit->add_option("--raw-draws", fa.raw_draws, "also dump unconstrained draws to this CSV");

  std::string bundle_dir, plot_kind = "forest", plot_out;
  CLI::App* plot = app.add_subcommand("plot", "render a forest or trace plot from a bundle");
  plot->add_option("--bundle", bundle_dir, "fit bundle directory")->required();
  plot->add_option("--kind", plot_kind, "forest | trace");
  plot->add_option("--out", plot_out, "output SVG path");

  std::vector<std::string> bundles;
  std::string compare_out;
  CLI::App* cmp = app.add_subcommand("compare", "compare fitted models by WAIC");
  cmp->add_option("bundles", bundles, "fit bundle directories")->expected(-1);
  cmp->add_option("--out", compare_out, "CSV output path");

  try {
    app.parse(argc, argv);
    if (fit->parsed()) return cli_detail::run_fit(fa);
    if (plot->parsed()) return cli_detail::run_plot(bundle_dir, plot_kind, plot_out);
    if (cmp->parsed()) return cli_detail::run_compare(bundles, compare_out);
    return exit_usage;
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "dtameta: error[usage]: %s\n", e.what());
    return exit_usage;
  } catch (const usage_error& e) {
    std::fprintf(stderr, "dtameta: error[usage]: %s\n", e.what());
    return exit_usage;
  } catch (const data_error& e) {
    std::fprintf(stderr, "dtameta: error[data]: %s\n", e.what());
    return exit_data;
  } catch (const sampling_error& e) {
    std::fprintf(stderr, "dtameta: error[sampling]: %s\n", e.what());
    return exit_sampling;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dtameta: error[internal]: %s\n", e.what());
    return exit_internal;
  }
}

}  // namespace dtameta::cli

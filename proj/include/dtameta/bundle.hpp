// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "dtameta/fit.hpp"
#include "dtameta/plots.hpp"
#include "dtameta/summaries.hpp"

namespace dtameta {

/// Everything needed to reproduce a fit, recorded verbatim into the bundle.
struct RunManifest {
  std::string subcommand = "fit";
  std::string dataset_source;  // "builtin:<name>" or "file:<path>"
  std::string sid_column;
  std::string csv_format;  // "dis_nondis" | "tp_fp_tn_fn" | "" for builtins
  std::string model;       // copula family or "brma"
  std::string formula;
  ChainConfig config;
  std::string out_dir;
  std::string manifest_version = "v1";
  std::string summary_version = "v1";
  std::string draws_version = "v1";
};

namespace bundle_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace bundle_detail

inline nlohmann::json chain_config_to_json(const ChainConfig& c) {
  return {{"chains", c.chains},     {"iter", c.iter},
          {"warmup", c.warmup},     {"thin", c.thin},
          {"seed", c.seed},         {"max_tree_depth", c.max_tree_depth},
          {"target_accept", c.target_accept}};
}

inline ChainConfig chain_config_from_json(const nlohmann::json& j) {
  ChainConfig c;
  c.chains = j.at("chains").get<int>();
  c.iter = j.at("iter").get<int>();
  c.warmup = j.at("warmup").get<int>();
  c.thin = j.at("thin").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_tree_depth = j.at("max_tree_depth").get<int>();
  c.target_accept = j.at("target_accept").get<double>();
  return c;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"subcommand", m.subcommand},
          {"dataset_source", m.dataset_source},
          {"sid_column", m.sid_column},
          {"csv_format", m.csv_format},
          {"model", m.model},
          {"formula", m.formula},
          {"chain_config", chain_config_to_json(m.config)},
          {"out_dir", m.out_dir},
          {"format_versions",
           {{"manifest", m.manifest_version},
            {"summary", m.summary_version},
            {"draws", m.draws_version}}}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.dataset_source = j.at("dataset_source").get<std::string>();
  m.sid_column = j.at("sid_column").get<std::string>();
  m.csv_format = j.at("csv_format").get<std::string>();
  m.model = j.at("model").get<std::string>();
  m.formula = j.at("formula").get<std::string>();
  m.config = chain_config_from_json(j.at("chain_config"));
  m.out_dir = j.at("out_dir").get<std::string>();
  const auto& v = j.at("format_versions");
  m.manifest_version = v.at("manifest").get<std::string>();
  m.summary_version = v.at("summary").get<std::string>();
  m.draws_version = v.at("draws").get<std::string>();
  return m;
}

inline nlohmann::json summary_to_json(const FitSummary& s) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : s.params) {
    params.push_back({{"name", p.name},
                      {"role", p.role},
                      {"mean", p.mean},
                      {"sd", p.sd},
                      {"lower", p.lower},
                      {"upper", p.upper},
                      {"n_eff", p.n_eff},
                      {"rhat", p.rhat},
                      {"mcse", p.mcse},
                      {"degenerate", p.degenerate}});
  }
  return {{"schema_version", "v1"},
          {"model",
           {{"name", s.model}, {"formula", s.formula}, {"cells", s.cells}}},
          {"dataset",
           {{"name", s.dataset_name},
            {"fingerprint", s.dataset_fingerprint},
            {"n_studies", s.n_studies}}},
          {"sampling", [&] {
             nlohmann::json j = chain_config_to_json(s.config);
             j["total_draws"] = s.total_draws;
             j["divergences"] = s.divergences;
             return j;
           }()},
          {"parameters", params},
          {"waic",
           {{"lppd", s.waic.lppd}, {"p_waic", s.waic.p_waic}, {"waic", s.waic.waic}}}};
}

inline FitSummary summary_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<std::string>() != "v1")
    throw io_error("unsupported summary schema version");
  FitSummary s;
  s.model = j.at("model").at("name").get<std::string>();
  s.formula = j.at("model").at("formula").get<std::string>();
  s.cells = j.at("model").at("cells").get<std::vector<std::string>>();
  s.dataset_name = j.at("dataset").at("name").get<std::string>();
  s.dataset_fingerprint = j.at("dataset").at("fingerprint").get<std::string>();
  s.n_studies = j.at("dataset").at("n_studies").get<int>();
  s.config = chain_config_from_json(j.at("sampling"));
  s.total_draws = j.at("sampling").at("total_draws").get<int>();
  s.divergences = j.at("sampling").at("divergences").get<int>();
  for (const auto& p : j.at("parameters")) {
    ParamSummary ps;
    ps.name = p.at("name").get<std::string>();
    ps.role = p.at("role").get<std::string>();
    ps.mean = p.at("mean").get<double>();
    ps.sd = p.at("sd").get<double>();
    ps.lower = p.at("lower").get<double>();
    ps.upper = p.at("upper").get<double>();
    ps.n_eff = p.at("n_eff").get<double>();
    ps.rhat = p.at("rhat").get<double>();
    ps.mcse = p.at("mcse").get<double>();
    ps.degenerate = p.at("degenerate").get<bool>();
    s.params.push_back(std::move(ps));
  }
  s.waic.lppd = j.at("waic").at("lppd").get<double>();
  s.waic.p_waic = j.at("waic").at("p_waic").get<double>();
  s.waic.waic = j.at("waic").at("waic").get<double>();
  return s;
}

inline std::string dataset_to_csv(const Dataset& d) {
  std::string out = "study_id,tp,n_diseased,tn,n_healthy";
  for (const auto& c : d.covariate_names) out += "," + bundle_detail::csv_quote(c);
  out += "\n";
  for (const auto& r : d.records) {
    out += bundle_detail::csv_quote(r.id) + "," + std::to_string(r.tp) + "," +
           std::to_string(r.n_diseased) + "," + std::to_string(r.tn) + "," +
           std::to_string(r.n_healthy);
    for (const auto& c : d.covariate_names) out += "," + bundle_detail::csv_quote(r.covariates.at(c));
    out += "\n";
  }
  return out;
}

inline Dataset dataset_from_csv(const std::string& text, const std::string& name) {
  const auto rows = csv_detail::tokenize(text);
  if (rows.size() < 2) throw io_error("bundle data.csv is empty");
  std::vector<std::string> covs(rows[0].begin() + 5, rows[0].end());
  std::vector<StudyRecord> recs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    StudyRecord r;
    r.id = rows[i][0];
    r.tp = std::stoi(rows[i][1]);
    r.n_diseased = std::stoi(rows[i][2]);
    r.tn = std::stoi(rows[i][3]);
    r.n_healthy = std::stoi(rows[i][4]);
    for (std::size_t c = 0; c < covs.size(); ++c) r.covariates[covs[c]] = rows[i][5 + c];
    recs.push_back(std::move(r));
  }
  Dataset d = Dataset::from_records(std::move(recs), std::move(covs), name);
  return d;
}

inline std::string draws_to_csv(const FitResult& fit) {
  const auto& names = fit.chains[0].constrained_names;
  std::string out = "chain,draw";
  for (const auto& n : names) out += "," + bundle_detail::csv_quote(n);
  out += "\n";
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& chain = fit.chains[c];
    for (int s = 0; s < chain.kept; ++s) {
      out += std::to_string(c + 1) + "," + std::to_string(s + 1);
      for (std::size_t j = 0; j < names.size(); ++j) {
        out += "," + bundle_detail::format_double(chain.cdraw(s, j));
      }
      out += "\n";
    }
  }
  return out;
}

struct BundleDraws {
  std::vector<std::string> names;
  // chains x draws x params
  std::vector<std::vector<std::vector<double>>> values;
};

inline BundleDraws draws_from_csv(const std::string& text) {
  const auto rows = csv_detail::tokenize(text);
  if (rows.size() < 2) throw io_error("draws.csv is empty");
  BundleDraws d;
  d.names.assign(rows[0].begin() + 2, rows[0].end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::size_t chain = std::stoul(rows[i][0]);
    if (chain > d.values.size()) d.values.resize(chain);
    std::vector<double> draw(d.names.size());
    for (std::size_t j = 0; j < d.names.size(); ++j) draw[j] = std::stod(rows[i][2 + j]);
    d.values[chain - 1].push_back(std::move(draw));
  }
  return d;
}

inline std::string diagnostics_to_csv(const FitSummary& s) {
  std::string out = "name,role,mean,sd,lower,upper,n_eff,rhat,mcse,degenerate\n";
  for (const auto& p : s.params) {
    out += bundle_detail::csv_quote(p.name) + "," + p.role + "," +
           bundle_detail::format_double(p.mean) + "," + bundle_detail::format_double(p.sd) +
           "," + bundle_detail::format_double(p.lower) + "," +
           bundle_detail::format_double(p.upper) + "," + bundle_detail::format_double(p.n_eff) +
           "," + bundle_detail::format_double(p.rhat) + "," +
           bundle_detail::format_double(p.mcse) + "," + (p.degenerate ? "1" : "0") + "\n";
  }
  return out;
}

/// Write the full bundle: manifest.json, summary.json, draws.csv,
/// diagnostics.csv and the canonical data.csv the fit consumed.
inline void write_bundle(const std::string& dir, const RunManifest& manifest,
                         const FitResult& fit, const FitSummary& summary) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir);
  bundle_detail::write_file(fs::path(dir) / "manifest.json",
                            manifest_to_json(manifest).dump(2) + "\n");
  bundle_detail::write_file(fs::path(dir) / "summary.json",
                            summary_to_json(summary).dump(2) + "\n");
  bundle_detail::write_file(fs::path(dir) / "draws.csv", draws_to_csv(fit));
  bundle_detail::write_file(fs::path(dir) / "diagnostics.csv", diagnostics_to_csv(summary));
  bundle_detail::write_file(fs::path(dir) / "data.csv", dataset_to_csv(fit.data));
}

inline RunManifest read_manifest(const std::string& dir) {
  return manifest_from_json(nlohmann::json::parse(
      bundle_detail::read_file(std::filesystem::path(dir) / "manifest.json")));
}

inline FitSummary read_summary(const std::string& dir) {
  return summary_from_json(nlohmann::json::parse(
      bundle_detail::read_file(std::filesystem::path(dir) / "summary.json")));
}

inline Dataset read_bundle_dataset(const std::string& dir) {
  return dataset_from_csv(
      bundle_detail::read_file(std::filesystem::path(dir) / "data.csv"), "bundle");
}

inline BundleDraws read_bundle_draws(const std::string& dir) {
  return draws_from_csv(bundle_detail::read_file(std::filesystem::path(dir) / "draws.csv"));
}

/// Optional raw dump of the unconstrained draws (column per parameter).
inline std::string unconstrained_draws_to_csv(const FitResult& fit) {
  std::string out = "chain,draw";
  for (const auto& n : fit.unconstrained_names) out += "," + bundle_detail::csv_quote(n);
  out += "\n";
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& chain = fit.chains[c];
    for (int s = 0; s < chain.kept; ++s) {
      out += std::to_string(c + 1) + "," + std::to_string(s + 1);
      for (int j = 0; j < chain.dim; ++j) out += "," + bundle_detail::format_double(chain.draw(s, j));
      out += "\n";
    }
  }
  return out;
}

}  // namespace dtameta

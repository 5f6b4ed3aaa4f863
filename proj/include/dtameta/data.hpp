// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dtameta/errors.hpp"

namespace dtameta {

/// One study's 2x2 table in canonical form plus categorical covariates.
struct StudyRecord {
  std::string id;
  int tp = 0;
  int n_diseased = 0;
  int tn = 0;
  int n_healthy = 0;
  std::map<std::string, std::string> covariates;
};

/// Ordered collection of studies; covariate levels keep first-appearance order.
struct Dataset {
  std::string name;  // builtin name or source label, "" when anonymous
  std::vector<StudyRecord> records;
  std::vector<std::string> covariate_names;
  std::map<std::string, std::vector<std::string>> covariate_levels;

  std::size_t size() const { return records.size(); }

  void validate() const {
    if (records.size() < 2) throw validation_error("dataset needs at least 2 studies");
    std::set<std::string> cell_ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const std::string where = "record " + std::to_string(i + 1) + " (" + r.id + ")";
      if (r.n_diseased < 1 || r.n_healthy < 1)
        throw validation_error(where + ": group sizes must be >= 1");
      if (r.tp < 0 || r.tp > r.n_diseased)
        throw validation_error(where + ": tp must satisfy 0 <= tp <= n_diseased");
      if (r.tn < 0 || r.tn > r.n_healthy)
        throw validation_error(where + ": tn must satisfy 0 <= tn <= n_healthy");
      if (r.covariates.size() != covariate_names.size())
        throw validation_error(where + ": covariate keys differ across records");
      std::string cell = r.id;
      for (const auto& name : covariate_names) {
        auto it = r.covariates.find(name);
        if (it == r.covariates.end())
          throw validation_error(where + ": missing covariate " + name);
        cell += "\x1f" + it->second;
      }
      if (!cell_ids.insert(cell).second)
        throw validation_error(where + ": duplicate study id within covariate cell");
    }
  }

  /// FNV-1a hash over the canonical serialization; used to detect that two
  /// fits were produced from the same data.
  std::string fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    const auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
      h ^= 0x1f;
      h *= 1099511628211ull;
    };
    for (const auto& r : records) {
      mix(r.id);
      mix(std::to_string(r.tp));
      mix(std::to_string(r.n_diseased));
      mix(std::to_string(r.tn));
      mix(std::to_string(r.n_healthy));
      for (const auto& name : covariate_names) mix(r.covariates.at(name));
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

  static Dataset from_records(std::vector<StudyRecord> recs,
                              std::vector<std::string> cov_names, std::string name = "") {
    Dataset d;
    d.name = std::move(name);
    d.records = std::move(recs);
    d.covariate_names = std::move(cov_names);
    for (const auto& cov : d.covariate_names) d.covariate_levels[cov] = {};
    for (const auto& r : d.records) {
      for (const auto& cov : d.covariate_names) {
        auto it = r.covariates.find(cov);
        if (it == r.covariates.end()) continue;  // validate() reports this
        auto& lv = d.covariate_levels[cov];
        if (std::find(lv.begin(), lv.end(), it->second) == lv.end()) lv.push_back(it->second);
      }
    }
    d.validate();
    return d;
  }
};

enum class CsvFormat { dis_nondis, tp_fp_tn_fn };

inline CsvFormat csv_format_from_string(const std::string& s) {
  if (s == "dis_nondis") return CsvFormat::dis_nondis;
  if (s == "tp_fp_tn_fn") return CsvFormat::tp_fp_tn_fn;
  throw lookup_error("unknown CSV format: " + s);
}

namespace csv_detail {

/// RFC-4180-ish tokenizer: comma separated, double quotes with "" escapes.
inline std::vector<std::vector<std::string>> tokenize(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; any = true; break;
      case ',':
        row.push_back(field);
        field.clear();
        any = true;
        break;
      case '\r': break;
      case '\n':
        if (any || !field.empty() || !row.empty()) {
          row.push_back(field);
          rows.push_back(row);
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default: field += c; any = true; break;
    }
  }
  if (quoted) throw parse_error("unterminated quoted field");
  if (any || !field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

inline int parse_count(const std::string& raw, const std::string& column, std::size_t row) {
  const std::string s = trim(raw);
  if (s.empty()) throw parse_error("row " + std::to_string(row) + ": empty " + column);
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw parse_error("row " + std::to_string(row) + ": non-integer count '" + s + "' in " +
                        column);
  }
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw parse_error("row " + std::to_string(row) + ": count out of range in " + column);
  }
}

}  // namespace csv_detail

/// Parse CSV text into a canonical Dataset.
///
/// dis_nondis expects columns Dis, TP, NonDis, TN (per-group totals given);
/// tp_fp_tn_fn expects TP, FP, TN, FN and derives n_diseased = TP + FN,
/// n_healthy = TN + FP.
inline Dataset parse_csv(const std::string& text, CsvFormat format,
                         const std::string& id_column,
                         const std::vector<std::string>& covariate_columns = {}) {
  auto rows = csv_detail::tokenize(text);
  if (rows.empty()) throw schema_error("empty CSV: header row required");
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < rows[0].size(); ++j) col[csv_detail::trim(rows[0][j])] = j;

  std::vector<std::string> needed = {id_column};
  if (format == CsvFormat::dis_nondis) {
    needed.insert(needed.end(), {"Dis", "TP", "NonDis", "TN"});
  } else {
    needed.insert(needed.end(), {"TP", "FP", "TN", "FN"});
  }
  needed.insert(needed.end(), covariate_columns.begin(), covariate_columns.end());
  for (const auto& c : needed) {
    if (!col.count(c)) throw schema_error("missing column: " + c);
  }

  std::vector<StudyRecord> recs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& cells = rows[i];
    const auto get = [&](const std::string& c) -> std::string {
      const std::size_t j = col.at(c);
      if (j >= cells.size())
        throw parse_error("row " + std::to_string(i) + ": too few fields");
      return cells[j];
    };
    StudyRecord r;
    r.id = csv_detail::trim(get(id_column));
    if (format == CsvFormat::dis_nondis) {
      r.tp = csv_detail::parse_count(get("TP"), "TP", i);
      r.n_diseased = csv_detail::parse_count(get("Dis"), "Dis", i);
      r.tn = csv_detail::parse_count(get("TN"), "TN", i);
      r.n_healthy = csv_detail::parse_count(get("NonDis"), "NonDis", i);
    } else {
      const int tp = csv_detail::parse_count(get("TP"), "TP", i);
      const int fp = csv_detail::parse_count(get("FP"), "FP", i);
      const int tn = csv_detail::parse_count(get("TN"), "TN", i);
      const int fn = csv_detail::parse_count(get("FN"), "FN", i);
      r.tp = tp;
      r.n_diseased = tp + fn;
      r.tn = tn;
      r.n_healthy = tn + fp;
    }
    if (r.tp > r.n_diseased)
      throw validation_error("row " + std::to_string(i) + ": tp > n_diseased");
    if (r.tn > r.n_healthy)
      throw validation_error("row " + std::to_string(i) + ": tn > n_healthy");
    for (const auto& c : covariate_columns) r.covariates[c] = csv_detail::trim(get(c));
    recs.push_back(std::move(r));
  }
  return Dataset::from_records(std::move(recs), covariate_columns);
}

inline Dataset load_csv(const std::string& path, CsvFormat format, const std::string& id_column,
                        const std::vector<std::string>& covariate_columns = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Dataset d = parse_csv(buf.str(), format, id_column, covariate_columns);
  d.name = path;
  return d;
}

/// The two datasets analysed in the accompanying study, transcribed verbatim.
inline Dataset builtin_dataset(const std::string& name) {
  if (name == "telomerase") {
    // columns: id, n_diseased, tp, n_healthy, tn
    const int rows[10][5] = {
        {1, 33, 25, 26, 25},  {2, 21, 17, 14, 11},  {3, 104, 88, 47, 31},
        {4, 26, 16, 83, 80},  {5, 57, 40, 138, 137}, {6, 47, 38, 30, 24},
        {7, 42, 23, 12, 12},  {8, 33, 27, 20, 18},  {9, 17, 14, 32, 29},
        {10, 44, 37, 29, 7}};
    std::vector<StudyRecord> recs;
    for (const auto& r : rows) {
      StudyRecord s;
      s.id = std::to_string(r[0]);
      s.n_diseased = r[1];
      s.tp = r[2];
      s.n_healthy = r[3];
      s.tn = r[4];
      recs.push_back(std::move(s));
    }
    return Dataset::from_records(std::move(recs), {}, "telomerase");
  }
  if (name == "ascus") {
    struct Row {
      const char* test;
      const char* id;
      int tp, fp, tn, fn;
    };
    const Row rows[20] = {
        {"RepC", "Andersson 2005", 6, 14, 28, 4},
        {"RepC", "Bergeron 2000", 8, 28, 71, 4},
        {"RepC", "Del Mistro 2010", 20, 191, 483, 7},
        {"RepC", "Kulasingam 2002", 20, 74, 170, 6},
        {"RepC", "Lytwyn 2000", 4, 20, 26, 2},
        {"RepC", "Manos 1999", 48, 324, 570, 15},
        {"RepC", "Monsonego 2008", 10, 18, 168, 15},
        {"RepC", "Morin 2001", 14, 126, 214, 5},
        {"RepC", "Silverloo 2009", 24, 43, 105, 10},
        {"RepC", "Solomon 2001", 227, 1132, 914, 40},
        {"HC2", "Andersson 2005", 6, 17, 25, 4},
        {"HC2", "Bergeron 2000", 10, 38, 61, 2},
        {"HC2", "Del Mistro 2010", 27, 154, 566, 2},
        {"HC2", "Kulasingam 2002", 23, 115, 129, 3},
        {"HC2", "Lytwyn 2000", 4, 19, 33, 1},
        {"HC2", "Manos 1999", 58, 326, 582, 7},
        {"HC2", "Monsonego 2008", 22, 110, 72, 2},
        {"HC2", "Morin 2001", 17, 88, 253, 2},
        {"HC2", "Silverloo 2009", 34, 65, 81, 2},
        {"HC2", "Solomon 2001", 256, 1050, 984, 11}};
    std::vector<StudyRecord> recs;
    for (const auto& r : rows) {
      StudyRecord s;
      s.id = r.id;
      s.tp = r.tp;
      s.n_diseased = r.tp + r.fn;
      s.tn = r.tn;
      s.n_healthy = r.tn + r.fp;
      s.covariates["Test"] = r.test;
      recs.push_back(std::move(s));
    }
    return Dataset::from_records(std::move(recs), {"Test"}, "ascus");
  }
  throw lookup_error("unknown builtin dataset: " + name);
}

enum class Coding { intercept, cell_means };

/// Model formula: intercept-only, or cell-means coding on one covariate
/// (no-intercept indicator matrix, one column per level).
struct Formula {
  Coding coding = Coding::intercept;
  std::string covariate;

  static Formula parse(const std::string& s) {
    if (s == "intercept") return {};
    const std::string prefix = "cellmeans:";
    if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size()) {
      return {Coding::cell_means, s.substr(prefix.size())};
    }
    throw usage_error("bad formula '" + s + "', expected intercept or cellmeans:COV");
  }

  std::string str() const {
    return coding == Coding::intercept ? "intercept" : "cellmeans:" + covariate;
  }
};

struct DesignMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;  // row-major
  std::vector<std::string> column_names;
  Coding coding = Coding::intercept;
  std::string covariate;  // source covariate under cell-means coding

  double operator()(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }

  Formula formula() const { return {coding, covariate}; }
};

inline DesignMatrix design_matrix(const Dataset& data, const Formula& formula) {
  DesignMatrix m;
  m.n_rows = data.size();
  m.coding = formula.coding;
  if (formula.coding == Coding::intercept) {
    m.n_cols = 1;
    m.column_names = {"(Intercept)"};
    m.values.assign(m.n_rows, 1.0);
    return m;
  }
  auto it = data.covariate_levels.find(formula.covariate);
  if (it == data.covariate_levels.end())
    throw lookup_error("unknown covariate: " + formula.covariate);
  const auto& levels = it->second;
  if (levels.size() < 2)
    throw validation_error("cell-means coding needs >= 2 levels for " + formula.covariate);
  m.n_cols = levels.size();
  m.column_names = levels;
  m.covariate = formula.covariate;
  m.values.assign(m.n_rows * m.n_cols, 0.0);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    const auto& level = data.records[i].covariates.at(formula.covariate);
    const auto pos = std::find(levels.begin(), levels.end(), level) - levels.begin();
    m.values[i * m.n_cols + static_cast<std::size_t>(pos)] = 1.0;
  }
  return m;
}

}  // namespace dtameta

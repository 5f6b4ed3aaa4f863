// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dtameta/data.hpp"
#include "dtameta/rng.hpp"

using namespace dtameta;

TEST_CASE("builtin telomerase matches the published listing") {
  const Dataset d = builtin_dataset("telomerase");
  REQUIRE(d.size() == 10);
  CHECK(d.covariate_names.empty());
  CHECK(d.records[0].tp == 25);
  CHECK(d.records[0].n_diseased == 33);
  CHECK(d.records[0].tn == 25);
  CHECK(d.records[0].n_healthy == 26);
  // study 7: observed specificity exactly 1
  CHECK(d.records[6].tn == 12);
  CHECK(d.records[6].n_healthy == 12);
  CHECK(d.records[9].tn == 7);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("builtin ascus canonicalizes tp_fp_tn_fn counts") {
  const Dataset d = builtin_dataset("ascus");
  REQUIRE(d.size() == 20);
  REQUIRE(d.covariate_names == std::vector<std::string>{"Test"});
  const auto& levels = d.covariate_levels.at("Test");
  // ordered by first appearance: RepC rows come first in the listing
  CHECK(levels == std::vector<std::string>{"RepC", "HC2"});
  const auto& solomon_hc2 = d.records[19];
  CHECK(solomon_hc2.id == "Solomon 2001");
  CHECK(solomon_hc2.tp == 256);
  CHECK(solomon_hc2.n_diseased == 267);
  CHECK(solomon_hc2.tn == 984);
  CHECK(solomon_hc2.n_healthy == 2034);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("unknown builtin name") {
  CHECK_THROWS_AS(builtin_dataset("foo"), lookup_error);
}

TEST_CASE("parse_csv dis_nondis") {
  const std::string csv =
      "ID,Dis,TP,NonDis,TN\n"
      "1,33,25,26,25\n"
      "2,21,17,14,11\n";
  const Dataset d = parse_csv(csv, CsvFormat::dis_nondis, "ID");
  REQUIRE(d.size() == 2);
  CHECK(d.records[0].tp == 25);
  CHECK(d.records[0].n_diseased == 33);
  CHECK(d.records[0].n_healthy == 26);
  CHECK(d.records[0].tn == 25);
}

TEST_CASE("parse_csv tp_fp_tn_fn with covariate and quoting") {
  const std::string csv =
      "Test,StudyID,TP,FP,TN,FN\n"
      "HC2,\"Solomon, 2001\",256,1050,984,11\n"
      "RepC,\"Solomon, 2001\",227,1132,914,40\n";
  const Dataset d = parse_csv(csv, CsvFormat::tp_fp_tn_fn, "StudyID", {"Test"});
  REQUIRE(d.size() == 2);
  CHECK(d.records[0].id == "Solomon, 2001");
  CHECK(d.records[0].n_diseased == 267);
  CHECK(d.records[0].n_healthy == 2034);
  CHECK(d.covariate_levels.at("Test") == std::vector<std::string>{"HC2", "RepC"});
}

TEST_CASE("parse_csv error taxonomy") {
  // missing column
  CHECK_THROWS_AS(parse_csv("ID,Dis,TP,TN\n1,3,2,1\n2,3,2,1\n", CsvFormat::dis_nondis, "ID"),
                  schema_error);
  // tp > n_diseased, row named
  try {
    parse_csv("ID,Dis,TP,NonDis,TN\n1,3,5,4,2\n2,3,2,4,2\n", CsvFormat::dis_nondis, "ID");
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  // non-integer count
  CHECK_THROWS_AS(
      parse_csv("ID,Dis,TP,NonDis,TN\n1,3,2.5,4,2\n2,3,2,4,2\n", CsvFormat::dis_nondis, "ID"),
      parse_error);
  // negative count
  CHECK_THROWS_AS(
      parse_csv("ID,Dis,TP,NonDis,TN\n1,3,-2,4,2\n2,3,2,4,2\n", CsvFormat::dis_nondis, "ID"),
      parse_error);
}

TEST_CASE("dataset invariant violations") {
  StudyRecord bad{"1", 5, 3, 1, 2, {}};  // tp=5 > n_diseased=3
  StudyRecord ok{"2", 1, 3, 1, 2, {}};
  CHECK_THROWS_AS(Dataset::from_records({bad, ok}, {}), validation_error);
  CHECK_THROWS_AS(Dataset::from_records({ok}, {}), validation_error);  // < 2 records
  // duplicate id within a covariate cell
  CHECK_THROWS_AS(Dataset::from_records({ok, ok}, {}), validation_error);
}

TEST_CASE("round trip: canonical form re-derives FP/FN exactly") {
  PhiloxRng rng(99, 0);
  rng.set_block(1);
  std::string csv = "ID,TP,FP,TN,FN\n";
  std::vector<std::array<int, 4>> rows;
  for (int i = 0; i < 25; ++i) {
    const int tp = static_cast<int>(rng.uniform() * 200);
    const int fp = static_cast<int>(rng.uniform() * 200);
    const int tn = static_cast<int>(rng.uniform() * 200);
    const int fn = static_cast<int>(rng.uniform() * 200);
    rows.push_back({tp, fp, tn + 1, fn});  // tn+1 keeps n_healthy >= 1
    csv += std::to_string(i) + "," + std::to_string(tp) + "," + std::to_string(fp) + "," +
           std::to_string(tn + 1) + "," + std::to_string(fn) + "\n";
  }
  const Dataset d = parse_csv(csv, CsvFormat::tp_fp_tn_fn, "ID");
  REQUIRE(d.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(d.records[i].tp == rows[i][0]);
    CHECK(d.records[i].n_healthy - d.records[i].tn == rows[i][1]);   // FP
    CHECK(d.records[i].tn == rows[i][2]);
    CHECK(d.records[i].n_diseased - d.records[i].tp == rows[i][3]);  // FN
  }
}

TEST_CASE("design matrix: intercept and cell-means coding") {
  const Dataset telo = builtin_dataset("telomerase");
  const DesignMatrix ones = design_matrix(telo, Formula::parse("intercept"));
  REQUIRE(ones.n_rows == 10);
  REQUIRE(ones.n_cols == 1);
  for (std::size_t i = 0; i < 10; ++i) CHECK(ones(i, 0) == 1.0);

  const Dataset ascus = builtin_dataset("ascus");
  const DesignMatrix cells = design_matrix(ascus, Formula::parse("cellmeans:Test"));
  REQUIRE(cells.n_rows == 20);
  REQUIRE(cells.n_cols == 2);
  CHECK(cells.column_names == std::vector<std::string>{"RepC", "HC2"});
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(cells(i, 0) == 1.0);
    CHECK(cells(i, 1) == 0.0);
  }
  for (std::size_t i = 10; i < 20; ++i) {
    CHECK(cells(i, 0) == 0.0);
    CHECK(cells(i, 1) == 1.0);
  }
  // cell-means row sums are exactly 1
  for (std::size_t i = 0; i < cells.n_rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cells.n_cols; ++j) s += cells(i, j);
    CHECK(s == 1.0);
  }
}

TEST_CASE("design matrix errors") {
  const Dataset ascus = builtin_dataset("ascus");
  CHECK_THROWS_AS(design_matrix(ascus, Formula::parse("cellmeans:nonexistent")), lookup_error);
  CHECK_THROWS_AS(Formula::parse("quadratic"), usage_error);
  // single-level covariate under cell-means
  std::vector<StudyRecord> recs;
  for (int i = 0; i < 3; ++i) {
    StudyRecord r{std::to_string(i), 1, 4, 2, 5, {{"Site", "A"}}};
    recs.push_back(r);
  }
  const Dataset one_level = Dataset::from_records(recs, {"Site"});
  CHECK_THROWS_AS(design_matrix(one_level, Formula::parse("cellmeans:Site")), validation_error);
}

TEST_CASE("fingerprints distinguish datasets") {
  const Dataset a = builtin_dataset("telomerase");
  const Dataset b = builtin_dataset("ascus");
  CHECK(a.fingerprint() == builtin_dataset("telomerase").fingerprint());
  CHECK(a.fingerprint() != b.fingerprint());
}

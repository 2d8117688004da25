#include <doctest.h>

#include <rfed/rfed.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace fs = std::filesystem;

TEST_CASE("c api: datasets") {
  rfed_dataset* ds = nullptr;
  REQUIRE(rfed_dataset_gaussian(6, 3, 1, &ds) == RFED_OK);
  CHECK(rfed_dataset_rows(ds) == 6);
  CHECK(rfed_dataset_cols(ds) == 3);
  std::vector<double> buf(18);
  CHECK(rfed_dataset_copy(ds, buf.data(), buf.size()) == RFED_OK);
  CHECK(rfed_dataset_copy(ds, buf.data(), 5) != RFED_OK);
  rfed_dataset_free(ds);

  rfed_dataset* missing = nullptr;
  CHECK(rfed_dataset_load_csv("/nonexistent/file.csv", 1, -1, &missing) == RFED_ERR_IO);
  CHECK(missing == nullptr);
  CHECK(std::string(rfed_last_error()).find("/nonexistent/file.csv") != std::string::npos);
  CHECK(std::strlen(rfed_status_string(RFED_ERR_PARSE)) > 0);
}

TEST_CASE("c api: null arguments are rejected") {
  CHECK(rfed_dataset_gaussian(2, 2, 0, nullptr) == RFED_ERR_INVALID_ARGUMENT);
  CHECK(rfed_experiment_from_json(nullptr, nullptr) == RFED_ERR_INVALID_ARGUMENT);
  rfed_dataset_free(nullptr);
  rfed_experiment_free(nullptr);
  rfed_result_free(nullptr);
}

TEST_CASE("c api: experiment round trip and run") {
  const char* json = R"({"task":"pca","dataset":{"kind":"gaussian","p":100,"d":6},"n":4,"k":2,)"
                     R"("rounds":10,"tau":1,"repeats":2,"seed":3})";
  rfed_experiment* exp = nullptr;
  REQUIRE(rfed_experiment_from_json(json, &exp) == RFED_OK);
  char* canonical = nullptr;
  REQUIRE(rfed_experiment_to_json(exp, &canonical) == RFED_OK);
  rfed_experiment* again = nullptr;
  REQUIRE(rfed_experiment_from_json(canonical, &again) == RFED_OK);
  rfed_string_free(canonical);
  rfed_experiment_free(again);

  rfed_result* res = nullptr;
  REQUIRE(rfed_run(exp, 2, &res) == RFED_OK);
  CHECK(rfed_result_row_count(res) == 22);
  rfed_history_row row{};
  REQUIRE(rfed_result_row(res, 21, &row) == RFED_OK);
  CHECK(row.repeat == 1);
  CHECK(row.round == 10);
  CHECK(row.algorithm == 0);
  CHECK(row.loss_gap < 1.0);
  CHECK(rfed_result_row(res, 22, &row) == RFED_ERR_INVALID_ARGUMENT);

  const fs::path dir = fs::temp_directory_path() / "rfed_capi_out";
  fs::remove_all(dir);
  CHECK(rfed_result_write(res, dir.c_str()) == RFED_OK);
  CHECK(fs::exists(dir / "history.csv"));
  rfed_result_free(res);

  rfed_result* cmp = nullptr;
  REQUIRE(rfed_compare(exp, 1, &cmp) == RFED_OK);
  CHECK(rfed_result_row_count(cmp) == 66);
  rfed_result_free(cmp);
  rfed_experiment_free(exp);
}

TEST_CASE("c api: invalid spec") {
  rfed_experiment* exp = nullptr;
  CHECK(rfed_experiment_from_json(R"({"r": 0})", &exp) == RFED_ERR_CONFIG);
  CHECK(std::string(rfed_last_error()).find("r") != std::string::npos);
  CHECK(rfed_experiment_from_json("[1,", &exp) != RFED_OK);
}

TEST_CASE("c api: consensus bench") {
  const size_t dims[] = {10, 30};
  rfed_bench_config cfg{dims, 2, 20, 2, 5, 0.0, 0, 0.0};
  rfed_bench_row rows[2];
  REQUIRE(rfed_consensus_bench(&cfg, rows, nullptr) == RFED_OK);
  CHECK(rows[0].d == 10);
  CHECK(rows[1].d == 30);
  CHECK(rows[0].tangent_h <= rows[0].h_anchor);
  CHECK(rows[0].karcher_converged == 1.0);
}

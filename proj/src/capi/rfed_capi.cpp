#include <rfed/rfed.h>

#include "rfed/data.hpp"
#include "rfed/error.hpp"
#include "rfed/experiment.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

struct rfed_dataset {
  rfed::DataMatrix data;
};

struct rfed_experiment {
  rfed::ExperimentSpec spec;
};

struct rfed_result {
  rfed::ResultTable table;
};

namespace {

thread_local std::string g_last_error;

rfed_status status_of(rfed::ErrorCode code) {
  using rfed::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidInput: return RFED_ERR_INVALID_ARGUMENT;
    case ErrorCode::Shape: return RFED_ERR_SHAPE;
    case ErrorCode::DegenerateGeometry: return RFED_ERR_DEGENERATE;
    case ErrorCode::OutOfInjectivity: return RFED_ERR_INJECTIVITY;
    case ErrorCode::NonConvergence: return RFED_ERR_CONVERGENCE;
    case ErrorCode::Io: return RFED_ERR_IO;
    case ErrorCode::Parse: return RFED_ERR_PARSE;
    case ErrorCode::Config: return RFED_ERR_CONFIG;
  }
  return RFED_ERR_INTERNAL;
}

rfed_status fail(rfed_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body and converts any exception into a status code.
template <class Body>
rfed_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    body();
    return RFED_OK;
  } catch (const rfed::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RFED_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RFED_ERR_INTERNAL, e.what());
  }
}

#define RFED_REQUIRE(cond, what) \
  if (!(cond)) return fail(RFED_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* rfed_last_error(void) { return g_last_error.c_str(); }

const char* rfed_status_string(rfed_status status) {
  switch (status) {
    case RFED_OK: return "ok";
    case RFED_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RFED_ERR_SHAPE: return "shape mismatch";
    case RFED_ERR_DEGENERATE: return "degenerate geometry";
    case RFED_ERR_INJECTIVITY: return "outside injectivity region";
    case RFED_ERR_CONVERGENCE: return "did not converge";
    case RFED_ERR_IO: return "I/O error";
    case RFED_ERR_PARSE: return "parse error";
    case RFED_ERR_CONFIG: return "invalid configuration";
    case RFED_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

rfed_status rfed_dataset_gaussian(size_t p, size_t d, uint64_t seed, rfed_dataset** out) {
  RFED_REQUIRE(out, "out must not be NULL");
  return guarded([&] {
    *out = new rfed_dataset{rfed::gen_gaussian(static_cast<rfed::Index>(p),
                                               static_cast<rfed::Index>(d), seed)};
  });
}

rfed_status rfed_dataset_load_csv(const char* path, int has_header, int label_column,
                                  rfed_dataset** out) {
  RFED_REQUIRE(path && out, "path and out must not be NULL");
  return guarded([&] { *out = new rfed_dataset{rfed::load_csv(path, has_header != 0, label_column)}; });
}

rfed_status rfed_dataset_load_idx(const char* path, rfed_dataset** out) {
  RFED_REQUIRE(path && out, "path and out must not be NULL");
  return guarded([&] { *out = new rfed_dataset{rfed::load_idx(path)}; });
}

size_t rfed_dataset_rows(const rfed_dataset* ds) {
  return ds ? static_cast<size_t>(ds->data.samples()) : 0;
}

size_t rfed_dataset_cols(const rfed_dataset* ds) {
  return ds ? static_cast<size_t>(ds->data.features()) : 0;
}

rfed_status rfed_dataset_copy(const rfed_dataset* ds, double* buf, size_t capacity) {
  RFED_REQUIRE(ds && buf, "dataset and buffer must not be NULL");
  const auto& v = ds->data.values;
  if (capacity < static_cast<size_t>(v.size()))
    return fail(RFED_ERR_SHAPE, "buffer too small for dataset");
  for (rfed::Index i = 0; i < v.rows(); ++i)
    for (rfed::Index j = 0; j < v.cols(); ++j) buf[i * v.cols() + j] = v(i, j);
  return RFED_OK;
}

void rfed_dataset_free(rfed_dataset* ds) { delete ds; }

rfed_status rfed_experiment_from_json(const char* json, rfed_experiment** out) {
  RFED_REQUIRE(json && out, "json and out must not be NULL");
  return guarded([&] { *out = new rfed_experiment{rfed::spec_from_json(json)}; });
}

rfed_status rfed_experiment_to_json(const rfed_experiment* exp, char** out_json) {
  RFED_REQUIRE(exp && out_json, "experiment and out must not be NULL");
  return guarded([&] {
    const std::string s = rfed::to_json(exp->spec);
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out_json = buf;
  });
}

void rfed_experiment_free(rfed_experiment* exp) { delete exp; }

void rfed_string_free(char* s) { std::free(s); }

rfed_status rfed_run(const rfed_experiment* exp, unsigned workers, rfed_result** out) {
  RFED_REQUIRE(exp && out, "experiment and out must not be NULL");
  return guarded([&] { *out = new rfed_result{rfed::run_experiment(exp->spec, workers ? workers : 1)}; });
}

rfed_status rfed_compare(const rfed_experiment* exp, unsigned workers, rfed_result** out) {
  RFED_REQUIRE(exp && out, "experiment and out must not be NULL");
  return guarded([&] { *out = new rfed_result{rfed::run_comparison(exp->spec, workers ? workers : 1)}; });
}

size_t rfed_result_row_count(const rfed_result* res) { return res ? res->table.rows.size() : 0; }

rfed_status rfed_result_row(const rfed_result* res, size_t index, rfed_history_row* row) {
  RFED_REQUIRE(res && row, "result and row must not be NULL");
  if (index >= res->table.rows.size()) return fail(RFED_ERR_INVALID_ARGUMENT, "row index out of range");
  const rfed::SeriesRow& r = res->table.rows[index];
  row->algorithm = static_cast<int>(r.algorithm);
  row->repeat = r.repeat;
  row->round = r.record.round;
  row->grad_norm = r.record.grad_norm;
  row->loss = r.record.loss;
  row->loss_gap = r.loss_gap;
  row->principal_angle_sum = r.record.principal_angle_sum.value_or(0.0);
  row->elapsed_seconds = r.record.elapsed_seconds;
  return RFED_OK;
}

rfed_status rfed_result_write(const rfed_result* res, const char* out_dir) {
  RFED_REQUIRE(res && out_dir, "result and out_dir must not be NULL");
  return guarded([&] { rfed::write_results(res->table, out_dir); });
}

void rfed_result_free(rfed_result* res) { delete res; }

rfed_status rfed_consensus_bench(const rfed_bench_config* cfg, rfed_bench_row* rows,
                                 const char* out_csv) {
  RFED_REQUIRE(cfg && rows, "config and rows must not be NULL");
  RFED_REQUIRE(cfg->dims || cfg->num_dims == 0, "dims must not be NULL");
  return guarded([&] {
    rfed::BenchConfig bc;
    bc.dims.assign(cfg->dims, cfg->dims + cfg->num_dims);
    bc.k = cfg->k;
    bc.trials = cfg->trials;
    bc.seed = cfg->seed;
    if (cfg->karcher_tol > 0.0) bc.karcher.karcher_tol = cfg->karcher_tol;
    if (cfg->karcher_max_iters > 0) bc.karcher.karcher_max_iters = cfg->karcher_max_iters;
    if (cfg->karcher_step > 0.0) bc.karcher.karcher_step = cfg->karcher_step;
    const auto table = rfed::consensus_bench(bc);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& t = table[i];
      rows[i] = {static_cast<size_t>(t.d), t.h_anchor, t.karcher_d2, t.karcher_h, t.karcher_seconds,
                 t.karcher_iterations, t.karcher_converged, t.tangent_d2, t.tangent_h,
                 t.tangent_seconds};
    }
    if (out_csv) {
      std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
      if (!out) throw rfed::Error(rfed::ErrorCode::Io, std::string("cannot write ") + out_csv);
      out << rfed::bench_csv(table);
    }
  });
}

}  // extern "C"

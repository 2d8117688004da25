/* Federated Riemannian optimization: C interface.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Every fallible call returns an rfed_status; on failure a human-readable
 * message is available from rfed_last_error() on the calling thread.
 */
#ifndef RFED_RFED_H
#define RFED_RFED_H

#include <stddef.h>
#include <stdint.h>

#if defined(RFED_BUILDING_LIBRARY)
#define RFED_API __attribute__((visibility("default")))
#else
#define RFED_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rfed_status {
  RFED_OK = 0,
  RFED_ERR_INVALID_ARGUMENT = 1,
  RFED_ERR_SHAPE = 2,
  RFED_ERR_DEGENERATE = 3,
  RFED_ERR_INJECTIVITY = 4,
  RFED_ERR_CONVERGENCE = 5,
  RFED_ERR_IO = 6,
  RFED_ERR_PARSE = 7,
  RFED_ERR_CONFIG = 8,
  RFED_ERR_INTERNAL = 9
} rfed_status;

typedef struct rfed_dataset rfed_dataset;
typedef struct rfed_experiment rfed_experiment;
typedef struct rfed_result rfed_result;

/* Message for the last failed call on this thread ("" if none). */
RFED_API const char* rfed_last_error(void);
RFED_API const char* rfed_status_string(rfed_status status);

/* ---- datasets ---------------------------------------------------------- */

RFED_API rfed_status rfed_dataset_gaussian(size_t p, size_t d, uint64_t seed, rfed_dataset** out);
/* label_column: 0-based index of a column to drop, or -1. */
RFED_API rfed_status rfed_dataset_load_csv(const char* path, int has_header, int label_column,
                                           rfed_dataset** out);
RFED_API rfed_status rfed_dataset_load_idx(const char* path, rfed_dataset** out);
RFED_API size_t rfed_dataset_rows(const rfed_dataset* ds);
RFED_API size_t rfed_dataset_cols(const rfed_dataset* ds);
/* Row-major copy of the p x d values into buf (capacity in doubles). */
RFED_API rfed_status rfed_dataset_copy(const rfed_dataset* ds, double* buf, size_t capacity);
RFED_API void rfed_dataset_free(rfed_dataset* ds);

/* ---- experiments ------------------------------------------------------- */

/* Parses and validates an experiment spec (the spec.json schema). */
RFED_API rfed_status rfed_experiment_from_json(const char* json, rfed_experiment** out);
/* Canonical JSON of the spec; release with rfed_string_free. */
RFED_API rfed_status rfed_experiment_to_json(const rfed_experiment* exp, char** out_json);
RFED_API void rfed_experiment_free(rfed_experiment* exp);
RFED_API void rfed_string_free(char* s);

/* Runs the configured algorithm over all repeats. workers = 0 means 1. */
RFED_API rfed_status rfed_run(const rfed_experiment* exp, unsigned workers, rfed_result** out);
/* Runs RFedSVRG, RFedAvg and RFedProx on identical data and initial points. */
RFED_API rfed_status rfed_compare(const rfed_experiment* exp, unsigned workers, rfed_result** out);

typedef struct rfed_history_row {
  int algorithm; /* 0 = RFedSVRG, 1 = RFedAvg, 2 = RFedProx */
  size_t repeat;
  size_t round;
  double grad_norm;
  double loss;
  double loss_gap;
  double principal_angle_sum;
  double elapsed_seconds;
} rfed_history_row;

RFED_API size_t rfed_result_row_count(const rfed_result* res);
RFED_API rfed_status rfed_result_row(const rfed_result* res, size_t index, rfed_history_row* row);
/* Writes history.csv, aggregate.csv, timing.csv, spec.json and SVG charts. */
RFED_API rfed_status rfed_result_write(const rfed_result* res, const char* out_dir);
RFED_API void rfed_result_free(rfed_result* res);

/* ---- consensus benchmark ----------------------------------------------- */

typedef struct rfed_bench_config {
  const size_t* dims;
  size_t num_dims;
  size_t k;
  size_t trials;
  uint64_t seed;
  double karcher_tol;      /* <= 0 selects 1e-6 */
  int karcher_max_iters;   /* <= 0 selects 200 */
  double karcher_step;     /* <= 0 selects 1.0 */
} rfed_bench_config;

typedef struct rfed_bench_row {
  size_t d;
  double h_anchor;
  double karcher_d2;
  double karcher_h;
  double karcher_seconds;
  double karcher_iterations;
  double karcher_converged;
  double tangent_d2;
  double tangent_h;
  double tangent_seconds;
} rfed_bench_row;

/* rows must hold cfg->num_dims entries. If out_csv is non-NULL the table is
 * also written there as CSV. */
RFED_API rfed_status rfed_consensus_bench(const rfed_bench_config* cfg, rfed_bench_row* rows,
                                          const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* RFED_RFED_H */

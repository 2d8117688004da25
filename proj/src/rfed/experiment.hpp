#pragma once

#include "rfed/consensus.hpp"
#include "rfed/fedopt.hpp"
#include "rfed/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rfed {

enum class Task { Pca, Kpca };

struct DatasetSpec {
  enum class Kind { Gaussian, Csv, Idx };
  Kind kind = Kind::Gaussian;
  Index p = 1000;  // gaussian only
  Index d = 20;    // gaussian only
  std::string path;
  bool has_header = true;
  int label_column = -1;
};

/// How eta is chosen: a literal value, or 1/L with L from `SmoothnessRule`.
enum class StepRule { Fixed, InverseMeanL, InverseSumL };

/// Fully resolved description of one experiment; serializes to spec.json.
struct ExperimentSpec {
  Task task = Task::Pca;
  DatasetSpec dataset;
  Index r = 1;
  AlgorithmConfig algorithm;
  StepRule step_rule = StepRule::Fixed;
  std::size_t baseline_local_steps = 5;  // tau for RFedAvg/RFedProx in `compare`
  std::size_t repeats = 10;
  bool center = false;
  bool standardize = false;
  bool normalize_covariance = false;
  bool shuffle = true;

  /// Throws Error(Config) naming the offending field.
  void validate() const;
};

std::string to_json(const ExperimentSpec& spec);
/// Missing fields take their defaults; unknown fields and bad values are errors.
ExperimentSpec spec_from_json(const std::string& json);

struct SeriesRow {
  Algorithm algorithm = Algorithm::RFedSVRG;
  std::size_t repeat = 0;
  RoundRecord record;
  double loss_gap = 0.0;
};

struct ResultTable {
  ExperimentSpec spec;      // as resolved (eta filled in)
  GroundTruth ground_truth;
  bool comparison = false;  // true when produced by run_comparison
  std::vector<SeriesRow> rows;

  struct AggregateRow {
    Algorithm algorithm;
    std::size_t round;
    double grad_norm;
    double loss_gap;
    double principal_angle_sum;
  };
  /// Per-algorithm, per-round means over repeats.
  std::vector<AggregateRow> aggregate() const;
};

/// Loads or generates the data, builds the objective and ground truth, and
/// runs the configured algorithm `repeats` times (seeds seed + 0 .. repeats-1,
/// one random initial point each). Repeats run on up to `workers` threads.
ResultTable run_experiment(const ExperimentSpec& spec, unsigned workers = 1);

/// All three algorithms on identical data, partition and initial points.
ResultTable run_comparison(const ExperimentSpec& spec, unsigned workers = 1);

/// history.csv, aggregate.csv, timing.csv, spec.json and one SVG per metric.
void write_results(const ResultTable& table, const std::filesystem::path& out_dir);

std::string history_csv(const ResultTable& table);
std::string aggregate_csv(const ResultTable& table);

struct BenchConfig {
  std::vector<Index> dims{100, 200, 500};
  std::size_t k = 100;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  ConsensusConfig karcher;  // method ignored; tol/step/max-iters used
};

struct BenchRow {
  Index d = 0;
  double h_anchor = 0.0;
  double karcher_d2 = 0.0;  // d^2(x_{t+1}, x_t)
  double karcher_h = 0.0;   // h(x_{t+1})
  double karcher_seconds = 0.0;
  double karcher_iterations = 0.0;
  double karcher_converged = 0.0;  // fraction of trials
  double tangent_d2 = 0.0;
  double tangent_h = 0.0;
  double tangent_seconds = 0.0;
};

/// Random anchor and k points on S^{d-1} per trial; both consensus rules;
/// trial-averaged distances and wall-clock.
std::vector<BenchRow> consensus_bench(const BenchConfig& cfg);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace rfed

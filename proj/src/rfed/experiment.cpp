#include "rfed/experiment.hpp"

#include "rfed/data.hpp"
#include "rfed/error.hpp"
#include "rfed/parallel.hpp"
#include "rfed/rng.hpp"
#include "rfed/svg_chart.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <map>

namespace rfed {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::Config, "field '" + field + "': " + message);
}

template <class Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<Task> kTasks[] = {{Task::Pca, "pca"}, {Task::Kpca, "kpca"}};
constexpr EnumName<Algorithm> kAlgorithms[] = {{Algorithm::RFedSVRG, "rfedsvrg"},
                                               {Algorithm::RFedAvg, "rfedavg"},
                                               {Algorithm::RFedProx, "rfedprox"}};
constexpr EnumName<OutputOption> kOptions[] = {{OutputOption::Last, "last"},
                                               {OutputOption::UniformSample, "sample"}};
constexpr EnumName<ConsensusMethod> kConsensus[] = {{ConsensusMethod::TangentSpace, "tangent"},
                                                    {ConsensusMethod::Karcher, "karcher"}};
constexpr EnumName<StepRule> kStepRules[] = {{StepRule::Fixed, "fixed"},
                                             {StepRule::InverseMeanL, "inv-l-mean"},
                                             {StepRule::InverseSumL, "inv-l-sum"}};
constexpr EnumName<DatasetSpec::Kind> kKinds[] = {{DatasetSpec::Kind::Gaussian, "gaussian"},
                                                  {DatasetSpec::Kind::Csv, "csv"},
                                                  {DatasetSpec::Kind::Idx, "idx"}};

template <class Enum, std::size_t N>
const char* name_of(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class Enum, std::size_t N>
Enum parse_enum(const EnumName<Enum> (&table)[N], const std::string& field, const std::string& s) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  field_error(field, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

// Reads obj[key] into out if present, with a typed error naming the field.
template <class T>
void read(const json& obj, const std::string& prefix, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    field_error(prefix + key, "has the wrong type");
  }
}

template <class Enum, std::size_t N>
void read_enum(const json& obj, const char* key, const EnumName<Enum> (&table)[N], Enum& out) {
  std::string s;
  read(obj, "", key, s);
  if (!s.empty()) out = parse_enum(table, key, s);
}

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) field_error(prefix + it.key(), "unknown field");
  }
}

std::string num(double v) { return fmt::format("{}", v); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

void ExperimentSpec::validate() const {
  if (r < 1) field_error("r", "must be at least 1");
  if (task == Task::Pca && r != 1) field_error("r", "pca requires r = 1 (use task kpca for r > 1)");
  if (repeats < 1) field_error("repeats", "must be at least 1");
  if (dataset.kind == DatasetSpec::Kind::Gaussian) {
    if (dataset.p < 1) field_error("dataset.p", "must be at least 1");
    if (dataset.d < 1) field_error("dataset.d", "must be at least 1");
    if (r > dataset.d) field_error("r", "must not exceed the data dimension");
    if (static_cast<std::size_t>(dataset.p) < algorithm.n)
      field_error("n", "more clients than samples");
  } else if (dataset.path.empty()) {
    field_error("dataset.path", "required for csv/idx datasets");
  }
  if (algorithm.n < 1) field_error("n", "must be at least 1");
  if (algorithm.k < 1 || algorithm.k > algorithm.n) field_error("k", "must satisfy 1 <= k <= n");
  if (algorithm.local_steps < 1) field_error("tau", "must be at least 1");
  if (baseline_local_steps < 1) field_error("baseline_tau", "must be at least 1");
  if (step_rule == StepRule::Fixed && !(algorithm.step_size > 0.0))
    field_error("eta", "must be positive");
  if (!(algorithm.prox_weight >= 0.0)) field_error("mu", "must be non-negative");
  if (!(algorithm.consensus.beta > 0.0 && algorithm.consensus.beta <= 1.0))
    field_error("beta", "must lie in (0, 1]");
  if (!(algorithm.consensus.karcher_tol > 0.0)) field_error("karcher_tol", "must be positive");
  if (algorithm.consensus.karcher_max_iters < 1) field_error("karcher_max_iters", "must be positive");
  if (!(algorithm.consensus.karcher_step > 0.0)) field_error("karcher_step", "must be positive");
}

std::string to_json(const ExperimentSpec& spec) {
  json ds = {{"kind", name_of(kKinds, spec.dataset.kind)}};
  if (spec.dataset.kind == DatasetSpec::Kind::Gaussian) {
    ds["p"] = spec.dataset.p;
    ds["d"] = spec.dataset.d;
  } else {
    ds["path"] = spec.dataset.path;
  }
  if (spec.dataset.kind == DatasetSpec::Kind::Csv) {
    ds["has_header"] = spec.dataset.has_header;
    ds["label_column"] = spec.dataset.label_column;
  }
  const AlgorithmConfig& a = spec.algorithm;
  json j = {
      {"task", name_of(kTasks, spec.task)},
      {"dataset", ds},
      {"r", spec.r},
      {"algorithm", name_of(kAlgorithms, a.algorithm)},
      {"n", a.n},
      {"k", a.k},
      {"rounds", a.rounds},
      {"tau", a.local_steps},
      {"baseline_tau", spec.baseline_local_steps},
      {"eta", a.step_size},
      {"eta_rule", name_of(kStepRules, spec.step_rule)},
      {"mu", a.prox_weight},
      {"beta", a.consensus.beta},
      {"consensus", name_of(kConsensus, a.consensus.method)},
      {"karcher_tol", a.consensus.karcher_tol},
      {"karcher_max_iters", a.consensus.karcher_max_iters},
      {"karcher_step", a.consensus.karcher_step},
      {"server_option", name_of(kOptions, a.server_option)},
      {"client_option", name_of(kOptions, a.client_option)},
      {"seed", a.seed},
      {"repeats", spec.repeats},
      {"center", spec.center},
      {"standardize", spec.standardize},
      {"normalize_covariance", spec.normalize_covariance},
      {"shuffle", spec.shuffle},
  };
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Parse, "spec must be a JSON object");
  reject_unknown(j, "", {"task", "dataset", "r", "algorithm", "n", "k", "rounds", "tau",
                         "baseline_tau", "eta", "eta_rule", "mu", "beta", "consensus",
                         "karcher_tol", "karcher_max_iters", "karcher_step", "server_option",
                         "client_option", "seed", "repeats", "center", "standardize",
                         "normalize_covariance", "shuffle"});

  ExperimentSpec spec;
  AlgorithmConfig& a = spec.algorithm;
  read_enum(j, "task", kTasks, spec.task);
  if (auto it = j.find("dataset"); it != j.end()) {
    if (!it->is_object()) field_error("dataset", "must be an object");
    reject_unknown(*it, "dataset.", {"kind", "p", "d", "path", "has_header", "label_column"});
    std::string kind;
    read(*it, "dataset.", "kind", kind);
    if (!kind.empty()) spec.dataset.kind = parse_enum(kKinds, "dataset.kind", kind);
    read(*it, "dataset.", "p", spec.dataset.p);
    read(*it, "dataset.", "d", spec.dataset.d);
    read(*it, "dataset.", "path", spec.dataset.path);
    read(*it, "dataset.", "has_header", spec.dataset.has_header);
    read(*it, "dataset.", "label_column", spec.dataset.label_column);
  }
  read(j, "", "r", spec.r);
  read_enum(j, "algorithm", kAlgorithms, a.algorithm);
  read(j, "", "n", a.n);
  read(j, "", "k", a.k);
  read(j, "", "rounds", a.rounds);
  read(j, "", "tau", a.local_steps);
  read(j, "", "baseline_tau", spec.baseline_local_steps);
  read(j, "", "eta", a.step_size);
  read_enum(j, "eta_rule", kStepRules, spec.step_rule);
  read(j, "", "mu", a.prox_weight);
  read(j, "", "beta", a.consensus.beta);
  read_enum(j, "consensus", kConsensus, a.consensus.method);
  read(j, "", "karcher_tol", a.consensus.karcher_tol);
  read(j, "", "karcher_max_iters", a.consensus.karcher_max_iters);
  read(j, "", "karcher_step", a.consensus.karcher_step);
  read_enum(j, "server_option", kOptions, a.server_option);
  read_enum(j, "client_option", kOptions, a.client_option);
  read(j, "", "seed", a.seed);
  read(j, "", "repeats", spec.repeats);
  read(j, "", "center", spec.center);
  read(j, "", "standardize", spec.standardize);
  read(j, "", "normalize_covariance", spec.normalize_covariance);
  read(j, "", "shuffle", spec.shuffle);
  spec.validate();
  return spec;
}

namespace {

struct Problem {
  Manifold manifold;
  GlobalObjective objective;
  GroundTruth truth;
};

Problem build_problem(ExperimentSpec& spec) {
  spec.validate();
  DataMatrix data;
  switch (spec.dataset.kind) {
    case DatasetSpec::Kind::Gaussian:
      data = gen_gaussian(spec.dataset.p, spec.dataset.d, spec.algorithm.seed);
      break;
    case DatasetSpec::Kind::Csv:
      data = load_csv(spec.dataset.path, spec.dataset.has_header, spec.dataset.label_column);
      break;
    case DatasetSpec::Kind::Idx:
      data = load_idx(spec.dataset.path);
      break;
  }
  if (spec.standardize)
    data = standardize(data);
  else if (spec.center)
    data = center(data);

  if (spec.r > data.features()) field_error("r", "exceeds the data dimension " + std::to_string(data.features()));
  if (static_cast<std::size_t>(data.samples()) < spec.algorithm.n)
    field_error("n", "more clients than samples (" + std::to_string(data.samples()) + ")");

  const Partition part = partition_equal(static_cast<std::size_t>(data.samples()), spec.algorithm.n,
                                         spec.shuffle, spec.algorithm.seed);
  const std::vector<Matrix> covs = client_covariances(data, part, spec.normalize_covariance);
  Matrix mean = covs.front();
  for (std::size_t i = 1; i < covs.size(); ++i) mean += covs[i];
  mean /= static_cast<double>(covs.size());

  const Index d = data.features();
  Manifold m = spec.task == Task::Pca ? Manifold::sphere(d) : Manifold::stiefel(d, spec.r);
  GlobalObjective objective = GlobalObjective::from_covariances(covs);
  GroundTruth truth = top_r_eigenvectors(mean, spec.r);

  if (spec.step_rule != StepRule::Fixed) {
    const double l = spec.step_rule == StepRule::InverseMeanL
                         ? truth.eigenvalues(0)
                         : smoothness_constant(objective, SmoothnessRule::SumOfClients);
    if (!(l > 0.0)) throw Error(ErrorCode::Config, "cannot derive eta = 1/L: L is not positive");
    spec.algorithm.step_size = 1.0 / l;
  }
  return {m, std::move(objective), std::move(truth)};
}

Point initial_point(const Manifold& m, std::uint64_t seed) {
  auto rng = keyed_stream(seed, StreamTag::InitialPoint);
  return m.random_point(rng);
}

void append_runs(ResultTable& table, const Problem& problem, const std::vector<Algorithm>& algorithms,
                 unsigned workers) {
  const ExperimentSpec& spec = table.spec;
  const std::size_t jobs = algorithms.size() * spec.repeats;
  std::vector<std::vector<SeriesRow>> slots(jobs);
  parallel_for(jobs, workers, [&](std::size_t job) {
    const Algorithm algorithm = algorithms[job / spec.repeats];
    const std::size_t repeat = job % spec.repeats;
    AlgorithmConfig cfg = spec.algorithm;
    cfg.algorithm = algorithm;
    cfg.seed = spec.algorithm.seed + repeat;
    if (table.comparison && algorithm != Algorithm::RFedSVRG) cfg.local_steps = spec.baseline_local_steps;
    RunOptions opts;
    opts.reference = problem.truth.vectors;
    const Point x0 = initial_point(problem.manifold, cfg.seed);
    const RunResult result = run_federated(cfg, problem.manifold, problem.objective, x0, opts);
    for (const RoundRecord& rec : result.all_records())
      slots[job].push_back({algorithm, repeat, rec, rec.loss - problem.truth.f_star});
  });
  for (auto& s : slots) table.rows.insert(table.rows.end(), s.begin(), s.end());
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec_in, unsigned workers) {
  ResultTable table;
  table.spec = spec_in;
  Problem problem = build_problem(table.spec);
  table.ground_truth = problem.truth;
  append_runs(table, problem, {table.spec.algorithm.algorithm}, workers);
  return table;
}

ResultTable run_comparison(const ExperimentSpec& spec_in, unsigned workers) {
  ResultTable table;
  table.spec = spec_in;
  table.comparison = true;
  Problem problem = build_problem(table.spec);
  table.ground_truth = problem.truth;
  append_runs(table, problem, {Algorithm::RFedSVRG, Algorithm::RFedAvg, Algorithm::RFedProx}, workers);
  return table;
}

std::vector<ResultTable::AggregateRow> ResultTable::aggregate() const {
  struct Acc {
    double grad = 0, gap = 0, angle = 0;
    std::size_t count = 0;
  };
  std::map<std::pair<int, std::size_t>, Acc> acc;
  for (const SeriesRow& row : rows) {
    Acc& a = acc[{static_cast<int>(row.algorithm), row.record.round}];
    a.grad += row.record.grad_norm;
    a.gap += row.loss_gap;
    a.angle += row.record.principal_angle_sum.value_or(0.0);
    ++a.count;
  }
  std::vector<AggregateRow> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    if (a.count != spec.repeats)
      throw Error(ErrorCode::InvalidInput, "repeats disagree on the number of rounds");
    const double c = static_cast<double>(a.count);
    out.push_back({static_cast<Algorithm>(key.first), key.second, a.grad / c, a.gap / c, a.angle / c});
  }
  return out;
}

std::string history_csv(const ResultTable& table) {
  std::string out = table.comparison ? "algorithm," : "";
  out += "repeat,round,grad_norm,loss,loss_gap,principal_angle_sum\n";
  for (const SeriesRow& row : table.rows) {
    if (table.comparison) out += std::string(to_string(row.algorithm)) + ",";
    out += fmt::format("{},{},{},{},{},{}\n", row.repeat, row.record.round, num(row.record.grad_norm),
                       num(row.record.loss), num(row.loss_gap),
                       num(row.record.principal_angle_sum.value_or(0.0)));
  }
  return out;
}

std::string aggregate_csv(const ResultTable& table) {
  std::string out = "algorithm,round,grad_norm_mean,loss_gap_mean,principal_angle_sum_mean_rad\n";
  for (const auto& row : table.aggregate())
    out += fmt::format("{},{},{},{},{}\n", to_string(row.algorithm), row.round, num(row.grad_norm),
                       num(row.loss_gap), num(row.principal_angle_sum));
  return out;
}

void write_results(const ResultTable& table, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  std::string timing = "algorithm,repeat,round,elapsed_s\n";
  for (const SeriesRow& row : table.rows)
    timing += fmt::format("{},{},{},{}\n", to_string(row.algorithm), row.repeat, row.record.round,
                          num(row.record.elapsed_seconds));

  write_file(out_dir / "history.csv", history_csv(table));
  write_file(out_dir / "aggregate.csv", aggregate_csv(table));
  write_file(out_dir / "timing.csv", timing);
  write_file(out_dir / "spec.json", to_json(table.spec));

  const auto agg = table.aggregate();
  struct Metric {
    const char* file;
    const char* label;
    bool log_y;
    double ResultTable::AggregateRow::*field;
  };
  const Metric metrics[] = {
      {"grad_norm.svg", "mean ||grad f(x_t)||", true, &ResultTable::AggregateRow::grad_norm},
      {"loss_gap.svg", "mean f(x_t) - f*", true, &ResultTable::AggregateRow::loss_gap},
      {"principal_angle_sum.svg", "mean principal angle sum (rad)", true,
       &ResultTable::AggregateRow::principal_angle_sum},
  };
  for (const Metric& metric : metrics) {
    ChartSpec chart;
    chart.title = metric.label;
    chart.x_label = "round";
    chart.y_label = metric.label;
    chart.log_y = metric.log_y;
    std::map<int, ChartSeries> by_algorithm;
    for (const auto& row : agg) {
      ChartSeries& s = by_algorithm[static_cast<int>(row.algorithm)];
      s.name = to_string(row.algorithm);
      s.x.push_back(static_cast<double>(row.round));
      s.y.push_back(row.*metric.field);
    }
    for (auto& [_, s] : by_algorithm) chart.series.push_back(std::move(s));
    write_file(out_dir / metric.file, line_chart_svg(chart));
  }
}

std::vector<BenchRow> consensus_bench(const BenchConfig& cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::Config, "consensus bench needs k >= 1");
  if (cfg.trials < 1) throw Error(ErrorCode::Config, "consensus bench needs trials >= 1");
  cfg.karcher.validate();
  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> out;
  for (Index d : cfg.dims) {
    if (d < 2) throw Error(ErrorCode::Config, "consensus bench needs d >= 2");
    const Manifold m = Manifold::sphere(d);
    BenchRow row;
    row.d = d;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      auto rng = keyed_stream(cfg.seed, StreamTag::Bench, static_cast<std::uint64_t>(d), trial);
      const Point anchor = m.random_point(rng);
      std::vector<Point> points;
      points.reserve(cfg.k);
      for (std::size_t i = 0; i < cfg.k; ++i) points.push_back(m.random_point(rng));

      auto t0 = Clock::now();
      const KarcherResult karcher = karcher_mean(m, points, anchor, cfg.karcher);
      auto t1 = Clock::now();
      const Point tangent = tangent_space_mean(m, anchor, points, 1.0);
      auto t2 = Clock::now();

      const double dk = m.distance(anchor, karcher.mean);
      const double dt = m.distance(anchor, tangent);
      row.h_anchor += mean_squared_distance(m, anchor, points);
      row.karcher_d2 += dk * dk;
      row.karcher_h += mean_squared_distance(m, karcher.mean, points);
      row.karcher_seconds += std::chrono::duration<double>(t1 - t0).count();
      row.karcher_iterations += karcher.iterations;
      row.karcher_converged += karcher.converged ? 1.0 : 0.0;
      row.tangent_d2 += dt * dt;
      row.tangent_h += mean_squared_distance(m, tangent, points);
      row.tangent_seconds += std::chrono::duration<double>(t2 - t1).count();
    }
    const double n = static_cast<double>(cfg.trials);
    for (double* v : {&row.h_anchor, &row.karcher_d2, &row.karcher_h, &row.karcher_seconds,
                      &row.karcher_iterations, &row.karcher_converged, &row.tangent_d2,
                      &row.tangent_h, &row.tangent_seconds})
      *v /= n;
    out.push_back(row);
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "d,h_xt,karcher_d2_step,karcher_h_next,karcher_time_s,karcher_iterations,"
      "karcher_converged_fraction,tangent_d2_step,tangent_h_next,tangent_time_s\n";
  for (const BenchRow& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.d, num(r.h_anchor), num(r.karcher_d2),
                       num(r.karcher_h), num(r.karcher_seconds), num(r.karcher_iterations),
                       num(r.karcher_converged), num(r.tangent_d2), num(r.tangent_h),
                       num(r.tangent_seconds));
  return out;
}

}  // namespace rfed

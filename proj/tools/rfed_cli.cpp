// Command-line driver. Talks to the library only through the C API.

#include <rfed/rfed.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

constexpr int kExitError = 2;

unsigned workers_from_env() {
  const char* env = std::getenv("RFED_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0) {
    std::cerr << "warning: ignoring invalid RFED_WORKERS='" << env << "'\n";
    return 1;
  }
  return static_cast<unsigned>(v);
}

int report(rfed_status status) {
  std::cerr << "error: " << rfed_status_string(status) << ": " << rfed_last_error() << "\n";
  return kExitError;
}

struct RunFlags {
  std::string spec_file;
  std::string out = "out";
  std::string task, dataset, algorithm, consensus, server_option, client_option, eta;
  long long d = 0, p = 0, r = 0, label_column = -1;
  std::size_t n = 0, k = 0, tau = 0, baseline_tau = 0, rounds = 0, repeats = 0;
  double mu = 0, beta = 0, karcher_tol = 0, karcher_step = 0;
  int karcher_max_iters = 0;
  std::uint64_t seed = 0;
  bool center = false, standardize = false, normalize_cov = false, no_shuffle = false,
       no_header = false;
};

void add_run_flags(CLI::App& cmd, RunFlags& f, bool with_algorithm) {
  cmd.add_option("--spec", f.spec_file, "Start from a spec.json; explicit flags override it");
  cmd.add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd.add_option("--task", f.task, "pca (sphere, r = 1) or kpca (Stiefel)")
      ->check(CLI::IsMember({"pca", "kpca"}));
  cmd.add_option("--dataset", f.dataset, "gaussian | csv:PATH | idx:PATH | PATH");
  cmd.add_option("--d", f.d, "Feature dimension (gaussian)");
  cmd.add_option("--p", f.p, "Sample count (gaussian)");
  cmd.add_option("--r", f.r, "Subspace rank");
  cmd.add_option("--label-column", f.label_column, "CSV column to drop (0-based)");
  cmd.add_flag("--no-header", f.no_header, "CSV has no header row");
  cmd.add_option("--n", f.n, "Number of clients");
  cmd.add_option("--k", f.k, "Clients per round (default n/10)");
  cmd.add_option("--tau", f.tau, "Local steps per client");
  cmd.add_option("--baseline-tau", f.baseline_tau, "Local steps for RFedAvg/RFedProx in compare");
  cmd.add_option("--eta", f.eta, "Step size: a number, 1/L (mean covariance) or 1/Lsum");
  cmd.add_option("--mu", f.mu, "RFedProx proximal weight (default n/10)");
  cmd.add_option("--beta", f.beta, "Tangent-space moving-average weight in (0, 1]");
  cmd.add_option("--rounds", f.rounds, "Communication rounds T");
  cmd.add_option("--repeats", f.repeats, "Independent random initializations");
  cmd.add_option("--seed", f.seed, "Base seed");
  if (with_algorithm)
    cmd.add_option("--algorithm", f.algorithm)->check(CLI::IsMember({"rfedsvrg", "rfedavg", "rfedprox"}));
  cmd.add_option("--consensus", f.consensus)->check(CLI::IsMember({"tangent", "karcher"}));
  cmd.add_option("--karcher-tol", f.karcher_tol);
  cmd.add_option("--karcher-step", f.karcher_step);
  cmd.add_option("--karcher-max-iters", f.karcher_max_iters);
  cmd.add_option("--server-option", f.server_option)->check(CLI::IsMember({"last", "sample"}));
  cmd.add_option("--client-option", f.client_option)->check(CLI::IsMember({"last", "sample"}));
  cmd.add_flag("--center", f.center, "Center features before building covariances");
  cmd.add_flag("--standardize", f.standardize, "Center and scale features to unit variance");
  cmd.add_flag("--normalize-covariance", f.normalize_cov, "Divide each covariance by its sample count");
  cmd.add_flag("--no-shuffle", f.no_shuffle, "Partition rows in file order");
}

json dataset_json(const std::string& arg) {
  if (arg == "gaussian") return {{"kind", "gaussian"}};
  for (const char* kind : {"csv", "idx"}) {
    const std::string prefix = std::string(kind) + ":";
    if (arg.rfind(prefix, 0) == 0) return {{"kind", kind}, {"path", arg.substr(prefix.size())}};
  }
  const bool is_csv = std::filesystem::path(arg).extension() == ".csv";
  return {{"kind", is_csv ? "csv" : "idx"}, {"path", arg}};
}

// Flags explicitly given on the command line override the spec file.
std::optional<std::string> build_spec(const CLI::App& cmd, const RunFlags& f, bool compare) {
  json j = json::object();
  if (!f.spec_file.empty()) {
    std::ifstream in(f.spec_file);
    if (!in) {
      std::cerr << "error: cannot open spec file " << f.spec_file << "\n";
      return std::nullopt;
    }
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      std::cerr << "error: " << f.spec_file << ": " << e.what() << "\n";
      return std::nullopt;
    }
  }
  auto given = [&](const char* name) {
    const CLI::Option* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };

  if (given("--task")) j["task"] = f.task;
  if (given("--dataset")) {
    json ds = dataset_json(f.dataset);
    if (j.contains("dataset"))
      for (const char* key : {"has_header", "label_column"})
        if (j["dataset"].contains(key) && ds["kind"] == "csv") ds[key] = j["dataset"][key];
    j["dataset"] = ds;
  }
  if (given("--d")) j["dataset"]["d"] = f.d;
  if (given("--p")) j["dataset"]["p"] = f.p;
  if (given("--label-column")) j["dataset"]["label_column"] = f.label_column;
  if (f.no_header) j["dataset"]["has_header"] = false;
  if (given("--r")) j["r"] = f.r;
  if (given("--algorithm")) j["algorithm"] = f.algorithm;
  if (given("--n")) j["n"] = f.n;
  if (given("--k")) j["k"] = f.k;
  if (given("--tau")) j["tau"] = f.tau;
  if (given("--baseline-tau"))
    j["baseline_tau"] = f.baseline_tau;
  else if (compare && given("--tau"))
    j["baseline_tau"] = f.tau;
  if (given("--mu")) j["mu"] = f.mu;
  if (given("--beta")) j["beta"] = f.beta;
  if (given("--rounds")) j["rounds"] = f.rounds;
  if (given("--repeats")) j["repeats"] = f.repeats;
  if (given("--seed")) j["seed"] = f.seed;
  if (given("--consensus")) j["consensus"] = f.consensus;
  if (given("--karcher-tol")) j["karcher_tol"] = f.karcher_tol;
  if (given("--karcher-step")) j["karcher_step"] = f.karcher_step;
  if (given("--karcher-max-iters")) j["karcher_max_iters"] = f.karcher_max_iters;
  if (given("--server-option")) j["server_option"] = f.server_option;
  if (given("--client-option")) j["client_option"] = f.client_option;
  if (f.center) j["center"] = true;
  if (f.standardize) j["standardize"] = true;
  if (f.normalize_cov) j["normalize_covariance"] = true;
  if (f.no_shuffle) j["shuffle"] = false;

  if (given("--eta")) {
    if (f.eta == "1/L") {
      j["eta_rule"] = "inv-l-mean";
    } else if (f.eta == "1/Lsum") {
      j["eta_rule"] = "inv-l-sum";
    } else {
      try {
        std::size_t used = 0;
        j["eta"] = std::stod(f.eta, &used);
        if (used != f.eta.size()) throw std::invalid_argument(f.eta);
        j["eta_rule"] = "fixed";
      } catch (const std::exception&) {
        std::cerr << "error: --eta expects a number, 1/L or 1/Lsum, got '" << f.eta << "'\n";
        return std::nullopt;
      }
    }
  }

  // Experiment-protocol defaults that depend on n.
  const std::size_t n = j.value("n", std::size_t{10});
  j["n"] = n;
  if (!j.contains("k")) j["k"] = std::max<std::size_t>(1, n / 10);
  if (!j.contains("mu")) j["mu"] = static_cast<double>(n) / 10.0;
  if (!j.contains("rounds")) j["rounds"] = 600;
  if (!j.contains("eta_rule") && !j.contains("eta")) j["eta_rule"] = "inv-l-mean";
  if (!j.contains("task") && j.value("r", 1) > 1) j["task"] = "kpca";
  return j.dump();
}

int run_experiment(const CLI::App& cmd, const RunFlags& f, bool compare) {
  const auto spec = build_spec(cmd, f, compare);
  if (!spec) return kExitError;

  rfed_experiment* exp = nullptr;
  if (auto st = rfed_experiment_from_json(spec->c_str(), &exp); st != RFED_OK) return report(st);
  rfed_result* res = nullptr;
  const unsigned workers = workers_from_env();
  rfed_status st = compare ? rfed_compare(exp, workers, &res) : rfed_run(exp, workers, &res);
  rfed_experiment_free(exp);
  if (st != RFED_OK) return report(st);

  st = rfed_result_write(res, f.out.c_str());
  if (st != RFED_OK) {
    rfed_result_free(res);
    return report(st);
  }

  // Summary: final row of each (algorithm, repeat) series.
  const char* names[] = {"rfedsvrg", "rfedavg", "rfedprox"};
  const std::size_t rows = rfed_result_row_count(res);
  for (std::size_t i = 0; i < rows; ++i) {
    rfed_history_row row{}, next{};
    rfed_result_row(res, i, &row);
    const bool last = i + 1 == rows || (rfed_result_row(res, i + 1, &next), next.round == 0);
    if (last)
      std::printf("%-9s repeat %zu  round %zu  grad_norm %.3e  loss_gap %.3e  angle %.3e rad\n",
                  names[row.algorithm], row.repeat, row.round, row.grad_norm, row.loss_gap,
                  row.principal_angle_sum);
  }
  std::printf("results written to %s\n", f.out.c_str());
  rfed_result_free(res);
  return 0;
}

struct BenchFlags {
  std::vector<std::size_t> dims{100, 200, 500};
  std::size_t k = 100;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  double karcher_tol = 1e-6;
  double karcher_step = 1.0;
  int karcher_max_iters = 200;
  std::string out = "out";
};

int run_bench(const BenchFlags& f) {
  std::error_code ec;
  std::filesystem::create_directories(f.out, ec);
  if (ec) {
    std::cerr << "error: cannot create " << f.out << ": " << ec.message() << "\n";
    return kExitError;
  }
  const std::string csv = (std::filesystem::path(f.out) / "consensus.csv").string();
  rfed_bench_config cfg{f.dims.data(), f.dims.size(), f.k, f.trials, f.seed,
                        f.karcher_tol, f.karcher_max_iters, f.karcher_step};
  std::vector<rfed_bench_row> rows(f.dims.size());
  if (auto st = rfed_consensus_bench(&cfg, rows.data(), csv.c_str()); st != RFED_OK)
    return report(st);

  std::printf("%6s %8s | %10s %10s %10s %6s | %10s %10s %10s\n", "d", "h(x_t)", "K d2", "K h",
              "K time", "K its", "T d2", "T h", "T time");
  for (const auto& r : rows)
    std::printf("%6zu %8.3f | %10.3f %10.3f %10.4f %6.1f | %10.3f %10.3f %10.5f\n", r.d, r.h_anchor,
                r.karcher_d2, r.karcher_h, r.karcher_seconds, r.karcher_iterations, r.tangent_d2,
                r.tangent_h, r.tangent_seconds);
  std::printf("results written to %s\n", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated optimization on the sphere and Stiefel manifold (PCA / kPCA)"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one algorithm over repeated random initializations");
  add_run_flags(*run, run_flags, true);

  RunFlags compare_flags;
  auto* compare = app.add_subcommand("compare", "Run RFedSVRG, RFedAvg and RFedProx side by side");
  add_run_flags(*compare, compare_flags, false);

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("consensus-bench", "Tangent-space mean vs Karcher mean on the sphere");
  bench->add_option("--dims", bench_flags.dims, "Comma-separated dimensions")->delimiter(',');
  bench->add_option("--k", bench_flags.k, "Points per trial")->capture_default_str();
  bench->add_option("--trials", bench_flags.trials)->capture_default_str();
  bench->add_option("--seed", bench_flags.seed)->capture_default_str();
  bench->add_option("--karcher-tol", bench_flags.karcher_tol)->capture_default_str();
  bench->add_option("--karcher-step", bench_flags.karcher_step)->capture_default_str();
  bench->add_option("--karcher-max-iters", bench_flags.karcher_max_iters)->capture_default_str();
  bench->add_option("--out", bench_flags.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run) return run_experiment(*run, run_flags, false);
    if (*compare) return run_experiment(*compare, compare_flags, true);
    return run_bench(bench_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

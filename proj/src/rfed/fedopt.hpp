#pragma once

#include "rfed/consensus.hpp"
#include "rfed/manifold.hpp"
#include "rfed/objectives.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rfed {

enum class Algorithm { RFedSVRG, RFedAvg, RFedProx };
enum class OutputOption { Last, UniformSample };

const char* to_string(Algorithm a) noexcept;

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::RFedSVRG;
  std::size_t n = 1;            // clients
  std::size_t k = 1;            // clients sampled per round
  std::size_t rounds = 0;       // T
  std::size_t local_steps = 1;  // tau, shared by every client
  double step_size = 0.1;       // eta, constant across rounds
  OutputOption server_option = OutputOption::Last;
  OutputOption client_option = OutputOption::Last;
  double prox_weight = 0.0;  // mu, RFedProx only
  ConsensusConfig consensus;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;
  double grad_norm = 0.0;
  double loss = 0.0;
  std::optional<double> principal_angle_sum;
  std::vector<std::size_t> sampled_clients;  // empty for the terminal record
  double elapsed_seconds = 0.0;
};

struct RunOptions {
  std::optional<Matrix> reference;  // ground-truth basis for principal angles
  unsigned workers = 1;             // concurrent clients within a round
};

struct RunResult {
  Point output;                      // per server_option
  Point last_iterate;                // x_T
  std::vector<RoundRecord> history;  // metrics at x_0 .. x_{T-1}
  RoundRecord terminal;              // metrics at x_T

  /// history followed by the terminal record: T + 1 rows.
  std::vector<RoundRecord> all_records() const;
};

/// k distinct indices from [0, n), uniform over k-subsets, ascending.
std::vector<std::size_t> sample_clients(std::size_t n, std::size_t k, std::mt19937_64& rng);

/// One variance-reduced local step:
/// Exp_x(-eta [grad f_i(x) - P_{anchor -> x}(grad f_i(anchor) - grad f(anchor))]).
Point svrg_local_step(const Manifold& m, const Point& x_prev, const Point& anchor,
                      const Objective& client, const Tangent& global_grad_at_anchor, double eta);

/// Same step with the anchor-side correction grad f_i(anchor) - grad f(anchor)
/// precomputed once per round.
Point svrg_local_step_with_correction(const Manifold& m, const Point& x_prev, const Point& anchor,
                                      const Objective& client, const Tangent& correction, double eta);

/// Exp_x(-eta grad f_i(x))
Point fedavg_local_step(const Manifold& m, const Point& x, const Objective& client, double eta);

/// grad h_i(x) for h_i(x) = f_i(x) + (mu/2) d^2(x, anchor).
Tangent prox_grad(const Manifold& m, const Objective& client, const Point& x, const Point& anchor,
                  double mu);

/// Exp_x(-eta grad h_i(x))
Point prox_local_step(const Manifold& m, const Point& x, const Point& anchor,
                      const Objective& client, double mu, double eta);

RunResult run_rfedsvrg(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                       const Point& x0, const RunOptions& opts = {});
RunResult run_rfedavg(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                      const Point& x0, const RunOptions& opts = {});
RunResult run_rfedprox(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                       const Point& x0, const RunOptions& opts = {});

/// Dispatches on cfg.algorithm.
RunResult run_federated(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                        const Point& x0, const RunOptions& opts = {});

}  // namespace rfed

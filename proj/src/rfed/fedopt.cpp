#include "rfed/fedopt.hpp"

#include "rfed/error.hpp"
#include "rfed/metrics.hpp"
#include "rfed/parallel.hpp"
#include "rfed/rng.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace rfed {

const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::RFedSVRG: return "rfedsvrg";
    case Algorithm::RFedAvg: return "rfedavg";
    case Algorithm::RFedProx: return "rfedprox";
  }
  return "unknown";
}

void AlgorithmConfig::validate() const {
  if (n < 1) throw Error(ErrorCode::Config, "n must be at least 1");
  if (k < 1 || k > n) throw Error(ErrorCode::Config, "k must satisfy 1 <= k <= n");
  if (local_steps < 1) throw Error(ErrorCode::Config, "tau must be at least 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw Error(ErrorCode::Config, "eta must be positive and finite");
  if (!(prox_weight >= 0.0) || !std::isfinite(prox_weight))
    throw Error(ErrorCode::Config, "mu must be non-negative and finite");
  consensus.validate();
}

std::vector<RoundRecord> RunResult::all_records() const {
  std::vector<RoundRecord> out = history;
  out.push_back(terminal);
  return out;
}

std::vector<std::size_t> sample_clients(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  if (k < 1 || k > n) throw Error(ErrorCode::Config, "client sampling needs 1 <= k <= n");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k == n) return all;
  std::vector<std::size_t> out;
  out.reserve(k);
  std::sample(all.begin(), all.end(), std::back_inserter(out), k, rng);
  return out;
}

Point svrg_local_step_with_correction(const Manifold& m, const Point& x_prev, const Point& anchor,
                                      const Objective& client, const Tangent& correction,
                                      double eta) {
  const Tangent local = riemannian_grad(m, client, x_prev);
  const Tangent moved = m.transport(anchor, x_prev, correction);
  return m.exp(x_prev, -eta * (local - moved));
}

Point svrg_local_step(const Manifold& m, const Point& x_prev, const Point& anchor,
                      const Objective& client, const Tangent& global_grad_at_anchor, double eta) {
  if (!global_grad_at_anchor.base().same_as(anchor))
    throw Error(ErrorCode::InvalidInput, "global gradient is not anchored at the server point");
  const Tangent correction = riemannian_grad(m, client, anchor) - global_grad_at_anchor;
  return svrg_local_step_with_correction(m, x_prev, anchor, client, correction, eta);
}

Point fedavg_local_step(const Manifold& m, const Point& x, const Objective& client, double eta) {
  return m.exp(x, -eta * riemannian_grad(m, client, x));
}

Tangent prox_grad(const Manifold& m, const Objective& client, const Point& x, const Point& anchor,
                  double mu) {
  const Tangent g = riemannian_grad(m, client, x);
  if (mu == 0.0) return g;
  return g - mu * m.log(x, anchor);
}

Point prox_local_step(const Manifold& m, const Point& x, const Point& anchor,
                      const Objective& client, double mu, double eta) {
  return m.exp(x, -eta * prox_grad(m, client, x, anchor, mu));
}

namespace {

using Clock = std::chrono::steady_clock;

// Runs tau local steps for one client and returns the point sent to the server.
Point run_client(Algorithm algorithm, const AlgorithmConfig& cfg, const Manifold& m,
                 const GlobalObjective& f, const Point& anchor, const Tangent& global_grad,
                 std::size_t round, std::size_t client) {
  const Objective& fi = f.client(client);
  const std::size_t tau = cfg.local_steps;
  const bool sample_iterate =
      algorithm == Algorithm::RFedSVRG && cfg.client_option == OutputOption::UniformSample;
  std::size_t keep = tau;  // 1-based index of the returned iterate
  if (sample_iterate) {
    auto rng = keyed_stream(cfg.seed, StreamTag::ClientOption, round, client);
    keep = std::uniform_int_distribution<std::size_t>(1, tau)(rng);
  }

  std::optional<Tangent> correction;
  if (algorithm == Algorithm::RFedSVRG) correction = riemannian_grad(m, fi, anchor) - global_grad;

  Point x = anchor;
  for (std::size_t step = 1; step <= tau; ++step) {
    switch (algorithm) {
      case Algorithm::RFedSVRG:
        x = svrg_local_step_with_correction(m, x, anchor, fi, *correction, cfg.step_size);
        break;
      case Algorithm::RFedAvg:
        x = fedavg_local_step(m, x, fi, cfg.step_size);
        break;
      case Algorithm::RFedProx:
        x = prox_local_step(m, x, anchor, fi, cfg.prox_weight, cfg.step_size);
        break;
    }
    if (step == keep) return x;
  }
  return x;
}

RoundRecord measure(const GlobalObjective& f, const Point& x,
                    const Tangent& grad, std::size_t round, const RunOptions& opts,
                    Clock::time_point start) {
  RoundRecord rec;
  rec.round = round;
  rec.grad_norm = grad.norm();
  rec.loss = f.value(x.values());
  if (opts.reference) rec.principal_angle_sum = principal_angle_sum(x.values(), *opts.reference);
  rec.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rec;
}

RunResult run_impl(Algorithm algorithm, const AlgorithmConfig& cfg, const Manifold& m,
                   const GlobalObjective& f, const Point& x0, const RunOptions& opts) {
  cfg.validate();
  if (cfg.n != f.size())
    throw Error(ErrorCode::Config, "config n=" + std::to_string(cfg.n) + " but objective has " +
                                       std::to_string(f.size()) + " clients");
  if (f.dim() != m.dim()) throw Error(ErrorCode::Shape, "objective and manifold dimensions differ");
  if (!(x0.manifold() == m)) throw Error(ErrorCode::Shape, "initial point is not on " + m.name());
  if (opts.reference && (opts.reference->rows() != m.dim() || opts.reference->cols() != m.cols()))
    throw Error(ErrorCode::Shape, "reference basis has the wrong shape");

  const auto start = Clock::now();
  std::size_t sampled_round = 0;
  if (cfg.server_option == OutputOption::UniformSample && cfg.rounds > 0) {
    auto rng = keyed_stream(cfg.seed, StreamTag::ServerOption);
    sampled_round = std::uniform_int_distribution<std::size_t>(1, cfg.rounds)(rng);
  }

  RunResult result{x0, x0, {}, {}};
  result.history.reserve(cfg.rounds);
  Point x = x0;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    // Server-side full gradient over all n clients, shipped to the sampled ones.
    const Tangent global_grad = riemannian_grad(m, f, x);
    RoundRecord rec = measure(f, x, global_grad, t, opts, start);

    auto rng = keyed_stream(cfg.seed, StreamTag::ClientSampling, t);
    rec.sampled_clients = sample_clients(cfg.n, cfg.k, rng);

    std::vector<std::optional<Point>> returned(cfg.k);
    parallel_for(cfg.k, opts.workers, [&](std::size_t slot) {
      returned[slot] =
          run_client(algorithm, cfg, m, f, x, global_grad, t, rec.sampled_clients[slot]);
    });
    std::vector<Point> points;
    points.reserve(cfg.k);
    for (auto& p : returned) points.push_back(std::move(*p));

    x = consensus(m, x, points, cfg.consensus);
    result.history.push_back(std::move(rec));
    if (t + 1 == sampled_round) result.output = x;
  }

  result.terminal = measure(f, x, riemannian_grad(m, f, x), cfg.rounds, opts, start);
  result.last_iterate = x;
  if (cfg.server_option == OutputOption::Last || cfg.rounds == 0) result.output = x;
  return result;
}

}  // namespace

RunResult run_rfedsvrg(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                       const Point& x0, const RunOptions& opts) {
  return run_impl(Algorithm::RFedSVRG, cfg, m, f, x0, opts);
}

RunResult run_rfedavg(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                      const Point& x0, const RunOptions& opts) {
  return run_impl(Algorithm::RFedAvg, cfg, m, f, x0, opts);
}

RunResult run_rfedprox(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                       const Point& x0, const RunOptions& opts) {
  return run_impl(Algorithm::RFedProx, cfg, m, f, x0, opts);
}

RunResult run_federated(const AlgorithmConfig& cfg, const Manifold& m, const GlobalObjective& f,
                        const Point& x0, const RunOptions& opts) {
  return run_impl(cfg.algorithm, cfg, m, f, x0, opts);
}

}  // namespace rfed

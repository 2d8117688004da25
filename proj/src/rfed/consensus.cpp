#include "rfed/consensus.hpp"

#include "rfed/error.hpp"

namespace rfed {

void ConsensusConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::Config, "consensus beta must lie in (0, 1]");
  if (!(karcher_tol > 0.0)) throw Error(ErrorCode::Config, "karcher_tol must be positive");
  if (karcher_max_iters < 1) throw Error(ErrorCode::Config, "karcher_max_iters must be positive");
  if (!(karcher_step > 0.0)) throw Error(ErrorCode::Config, "karcher_step must be positive");
}

namespace {

Matrix mean_log(const Manifold& m, const Point& x, std::span<const Point> points) {
  Matrix sum = Matrix::Zero(m.dim(), m.cols());
  for (const Point& p : points) sum += m.log(x, p).values();
  return sum / static_cast<double>(points.size());
}

}  // namespace

Point tangent_space_mean(const Manifold& m, const Point& anchor, std::span<const Point> points,
                         double beta) {
  if (points.empty()) throw Error(ErrorCode::InvalidInput, "consensus over an empty point set");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::Config, "consensus beta must lie in (0, 1]");
  const Matrix step = beta * mean_log(m, anchor, points);
  return m.exp(anchor, m.project_tangent(anchor, step));
}

double mean_squared_distance(const Manifold& m, const Point& x, std::span<const Point> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidInput, "mean distance over an empty point set");
  double sum = 0.0;
  for (const Point& p : points) {
    const double dist = m.distance(x, p);
    sum += dist * dist;
  }
  return sum / static_cast<double>(points.size());
}

KarcherResult karcher_mean(const Manifold& m, std::span<const Point> points, const Point& init,
                           const ConsensusConfig& cfg) {
  if (points.empty()) throw Error(ErrorCode::InvalidInput, "Karcher mean of an empty point set");
  cfg.validate();
  Point x = init;
  KarcherResult out{init, 0, false, {}};
  const double k = static_cast<double>(points.size());
  for (int it = 1; it <= cfg.karcher_max_iters; ++it) {
    Matrix log_sum = Matrix::Zero(m.dim(), m.cols());
    double h = 0.0;
    for (const Point& p : points) {
      const Tangent v = m.log(x, p);
      h += v.values().squaredNorm();
      log_sum += v.values();
    }
    out.objective_trace.push_back(h / k);
    out.iterations = it;
    const Matrix mean = log_sum / k;
    // grad h = -(2/k) sum_i Log_x(x_i)
    if (2.0 * mean.norm() <= cfg.karcher_tol) {
      out.converged = true;
      break;
    }
    x = m.exp(x, m.project_tangent(x, cfg.karcher_step * mean));
  }
  out.mean = x;
  return out;
}

Point consensus(const Manifold& m, const Point& anchor, std::span<const Point> points,
                const ConsensusConfig& cfg) {
  if (cfg.method == ConsensusMethod::TangentSpace)
    return tangent_space_mean(m, anchor, points, cfg.beta);
  return karcher_mean(m, points, anchor, cfg).mean;
}

}  // namespace rfed

#pragma once

#include "rfed/manifold.hpp"

#include <span>
#include <vector>

namespace rfed {

enum class ConsensusMethod { TangentSpace, Karcher };

struct ConsensusConfig {
  ConsensusMethod method = ConsensusMethod::TangentSpace;
  double beta = 1.0;  // moving-average weight, 0 < beta <= 1
  double karcher_tol = 1e-6;
  int karcher_max_iters = 200;
  double karcher_step = 1.0;

  void validate() const;
};

/// Exp_anchor((beta / k) sum_i Log_anchor(x_i)); the sum runs in list order.
Point tangent_space_mean(const Manifold& m, const Point& anchor, std::span<const Point> points,
                         double beta = 1.0);

struct KarcherResult {
  Point mean;
  int iterations = 0;  // iterates at which the gradient was evaluated
  bool converged = false;
  std::vector<double> objective_trace;  // h at each evaluated iterate
};

/// h(x) = (1/k) sum_i d^2(x, x_i)
double mean_squared_distance(const Manifold& m, const Point& x, std::span<const Point> points);

/// Riemannian gradient descent on h from `init`. One step moves along
/// step * (1/k) sum_i Log_x(x_i), i.e. -(step/2) grad h, so step = 1 sends a
/// two-point problem to the geodesic midpoint. Stops once ||grad h|| <= tol.
KarcherResult karcher_mean(const Manifold& m, std::span<const Point> points, const Point& init,
                           const ConsensusConfig& cfg);

/// Dispatches on cfg.method; Karcher starts from the anchor.
Point consensus(const Manifold& m, const Point& anchor, std::span<const Point> points,
                const ConsensusConfig& cfg);

}  // namespace rfed

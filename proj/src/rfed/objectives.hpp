#pragma once

#include "rfed/manifold.hpp"

#include <memory>
#include <vector>

namespace rfed {

/// Smooth loss on d x r matrices. Implementations supply the value and the
/// Euclidean gradient; the Riemannian gradient is derived by projection.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Matrix& x) const = 0;
  virtual Matrix euclidean_grad(const Matrix& x) const = 0;
};

/// f(X) = -1/2 tr(X^T A X) for a symmetric PSD covariance A.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(Matrix a);

  const Matrix& covariance() const noexcept { return a_; }

  Index dim() const override { return a_.rows(); }
  double value(const Matrix& x) const override;
  Matrix euclidean_grad(const Matrix& x) const override;

 private:
  Matrix a_;
};

/// f(x) = (1/n) sum_i f_i(x).
class GlobalObjective {
 public:
  explicit GlobalObjective(std::vector<std::shared_ptr<const Objective>> clients);

  static GlobalObjective from_covariances(const std::vector<Matrix>& covariances);

  std::size_t size() const noexcept { return clients_.size(); }
  Index dim() const noexcept { return clients_.front()->dim(); }
  const Objective& client(std::size_t i) const { return *clients_.at(i); }

  double value(const Matrix& x) const;
  Matrix euclidean_grad(const Matrix& x) const;

 private:
  std::vector<std::shared_ptr<const Objective>> clients_;
};

Tangent riemannian_grad(const Manifold& m, const Objective& f, const Point& x);
Tangent riemannian_grad(const Manifold& m, const GlobalObjective& f, const Point& x);

/// How the smoothness constant behind an eta = 1/L step is estimated.
enum class SmoothnessRule {
  MeanCovariance,  // L = lambda_max((1/n) sum_i A_i)
  SumOfClients,    // L = sum_i lambda_max(A_i)
};

/// Estimates L for a global objective whose clients are all quadratic.
double smoothness_constant(const GlobalObjective& f, SmoothnessRule rule);

}  // namespace rfed

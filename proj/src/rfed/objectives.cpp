#include "rfed/objectives.hpp"

#include "rfed/error.hpp"
#include "rfed/metrics.hpp"
#include "rfed/tolerances.hpp"

namespace rfed {

namespace {

void check_rows(Index expected, const Matrix& x) {
  if (x.rows() != expected)
    throw Error(ErrorCode::Shape, "objective expects " + std::to_string(expected) +
                                      " rows, got " + std::to_string(x.rows()));
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0)
    throw Error(ErrorCode::Shape, "covariance must be a non-empty square matrix");
  if (!a_.allFinite()) throw Error(ErrorCode::InvalidInput, "covariance has non-finite entries");
  if ((a_ - a_.transpose()).norm() > tol::kSymmetry * std::max(1.0, a_.norm()))
    throw Error(ErrorCode::InvalidInput, "covariance is not symmetric");
}

double QuadraticObjective::value(const Matrix& x) const {
  check_rows(dim(), x);
  return -0.5 * (x.transpose() * a_ * x).trace();
}

Matrix QuadraticObjective::euclidean_grad(const Matrix& x) const {
  check_rows(dim(), x);
  return -(a_ * x);
}

GlobalObjective::GlobalObjective(std::vector<std::shared_ptr<const Objective>> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty()) throw Error(ErrorCode::InvalidInput, "global objective needs at least one client");
  for (const auto& c : clients_) {
    if (!c) throw Error(ErrorCode::InvalidInput, "null client objective");
    if (c->dim() != clients_.front()->dim())
      throw Error(ErrorCode::Shape, "client objectives disagree on dimension");
  }
}

GlobalObjective GlobalObjective::from_covariances(const std::vector<Matrix>& covariances) {
  std::vector<std::shared_ptr<const Objective>> clients;
  clients.reserve(covariances.size());
  for (const auto& a : covariances) clients.push_back(std::make_shared<QuadraticObjective>(a));
  return GlobalObjective(std::move(clients));
}

double GlobalObjective::value(const Matrix& x) const {
  double sum = 0.0;
  for (const auto& c : clients_) sum += c->value(x);
  return sum / static_cast<double>(clients_.size());
}

Matrix GlobalObjective::euclidean_grad(const Matrix& x) const {
  Matrix sum = clients_.front()->euclidean_grad(x);
  for (std::size_t i = 1; i < clients_.size(); ++i) sum += clients_[i]->euclidean_grad(x);
  return sum / static_cast<double>(clients_.size());
}

Tangent riemannian_grad(const Manifold& m, const Objective& f, const Point& x) {
  return m.project_tangent(x, f.euclidean_grad(x.values()));
}

Tangent riemannian_grad(const Manifold& m, const GlobalObjective& f, const Point& x) {
  return m.project_tangent(x, f.euclidean_grad(x.values()));
}

double smoothness_constant(const GlobalObjective& f, SmoothnessRule rule) {
  auto covariance_of = [&](std::size_t i) -> const Matrix& {
    const auto* q = dynamic_cast<const QuadraticObjective*>(&f.client(i));
    if (!q) throw Error(ErrorCode::InvalidInput, "smoothness estimate needs quadratic clients");
    return q->covariance();
  };
  if (rule == SmoothnessRule::MeanCovariance) {
    Matrix mean = covariance_of(0);
    for (std::size_t i = 1; i < f.size(); ++i) mean += covariance_of(i);
    mean /= static_cast<double>(f.size());
    return top_r_eigenvectors(mean, 1).eigenvalues(0);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += top_r_eigenvectors(covariance_of(i), 1).eigenvalues(0);
  return sum;
}

}  // namespace rfed

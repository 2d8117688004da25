#include "rfed/metrics.hpp"

#include "rfed/error.hpp"
#include "rfed/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rfed {

namespace {

Matrix orthonormalize(const Matrix& w) {
  Eigen::HouseholderQR<Matrix> qr(w);
  return qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
}

}  // namespace

GroundTruth top_r_eigenvectors(const Matrix& a, Index r, const EigenOptions& opts) {
  const Index d = a.rows();
  if (a.cols() != d) throw Error(ErrorCode::Shape, "eigen oracle needs a square matrix");
  if (r < 1 || r > d) throw Error(ErrorCode::InvalidInput, "eigen oracle needs 1 <= r <= d");
  if (!a.allFinite()) throw Error(ErrorCode::InvalidInput, "eigen oracle: non-finite matrix");
  const double a_norm = a.norm();
  if ((a - a.transpose()).norm() > tol::kSymmetry * std::max(1.0, a_norm))
    throw Error(ErrorCode::InvalidInput, "eigen oracle needs a symmetric matrix");

  // Shift so the spectrum is non-negative; iteration then targets the largest eigenvalues.
  double shift = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    shift = std::max(shift, -(a(i, i) - radius));
  }
  const Matrix shifted = a + shift * Matrix::Identity(d, d);

  // Oversampled block: convergence rate lambda_{block+1} / lambda_r.
  const Index block = std::min(d, 2 * r + 4);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(d, block);
  for (Index j = 0; j < block; ++j)
    for (Index i = 0; i < d; ++i) q(i, j) = normal(rng);
  q = orthonormalize(q);

  GroundTruth out;
  const double scale = a_norm > 0.0 ? a_norm : 1.0;
  Eigen::VectorXd ritz;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix aq = a * q;
    Eigen::SelfAdjointEigenSolver<Matrix> small(sym(q.transpose() * aq));
    // Eigen sorts ascending; reverse to descending.
    const Matrix basis = small.eigenvectors().rowwise().reverse();
    ritz = small.eigenvalues().reverse();
    q = q * basis;
    const Matrix top = q.leftCols(r);
    const Matrix resid = (aq * basis).leftCols(r) - top * ritz.head(r).asDiagonal();
    out.residual = resid.norm() / scale;
    out.iterations = it;
    if (out.residual <= opts.tol) break;
    if (it == opts.max_iters)
      throw Error(ErrorCode::NonConvergence,
                  "eigen oracle did not converge after " + std::to_string(opts.max_iters) +
                      " iterations (last residual " + std::to_string(out.residual) + ")");
    q = orthonormalize(shifted * q);
  }

  out.vectors = q.leftCols(r);
  out.eigenvalues = ritz.head(r);
  out.f_star = -0.5 * out.eigenvalues.sum();
  if (r < d) {
    const double next = block > r ? ritz(r) : -std::numeric_limits<double>::infinity();
    out.small_eigengap = ritz(r - 1) - next <= tol::kEigengapWarning * std::abs(ritz(0));
  }
  return out;
}

Eigen::VectorXd jacobi_singular_values(const Matrix& a) {
  Matrix u = a;
  const Index n = u.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n - 1; ++p)
      for (Index q = p + 1; q < n; ++q) {
        const double alpha = u.col(p).squaredNorm();
        const double beta = u.col(q).squaredNorm();
        const double gamma = u.col(p).dot(u.col(q));
        if (gamma == 0.0) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < u.rows(); ++i) {
          const double up = u(i, p);
          const double uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
      }
    if (off <= 1e-15) break;
  }
  Eigen::VectorXd sigma = u.colwise().norm().transpose();
  std::sort(sigma.data(), sigma.data() + sigma.size(), std::greater<>());
  return sigma;
}

double principal_angle_sum(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(ErrorCode::Shape, "principal angles need equally shaped bases");
  const Matrix cross = x.transpose() * y;
  // Cosines resolve large angles well, sines small ones.
  const Eigen::VectorXd cosines = jacobi_singular_values(cross);
  Eigen::VectorXd sines = jacobi_singular_values(y - x * cross);
  std::sort(sines.data(), sines.data() + sines.size());
  double sum = 0.0;
  for (Index j = 0; j < cosines.size(); ++j) {
    const double c = std::clamp(cosines(j), 0.0, 1.0);
    sum += c * c < 0.5 ? std::acos(c) : std::asin(std::clamp(sines(j), 0.0, 1.0));
  }
  return sum;
}

double global_grad_norm(const Manifold& m, const GlobalObjective& f, const Point& x) {
  if (f.dim() != m.dim()) throw Error(ErrorCode::Shape, "objective and manifold dimensions differ");
  return riemannian_grad(m, f, x).norm();
}

}  // namespace rfed

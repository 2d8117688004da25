#include "rfed/manifold.hpp"

#include "rfed/error.hpp"
#include "rfed/tolerances.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace rfed {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::Shape: return "shape mismatch";
    case ErrorCode::DegenerateGeometry: return "degenerate geometry";
    case ErrorCode::OutOfInjectivity: return "outside injectivity region";
    case ErrorCode::NonConvergence: return "did not converge";
    case ErrorCode::Io: return "I/O error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Config: return "invalid configuration";
  }
  return "unknown error";
}

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

// W (W^T W)^{-1/2}: the orthonormal polar factor of a full-column-rank W.
Matrix polar_factor(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w.transpose() * w);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 0.0 || !lambda.allFinite())
    throw Error(ErrorCode::DegenerateGeometry, "polar retraction: X + V is rank deficient");
  const Matrix inv_sqrt =
      eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  return w * inv_sqrt;
}

}  // namespace

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool Point::same_as(const Point& other) const {
  if (values_ == other.values_) return true;
  return manifold_ == other.manifold_ && *values_ == *other.values_;
}

Tangent Tangent::operator+(const Tangent& other) const {
  if (!base_.same_as(other.base_))
    throw Error(ErrorCode::InvalidInput, "adding tangent vectors at different base points");
  return Tangent(base_, values_ + other.values_);
}

Tangent Tangent::operator-(const Tangent& other) const {
  if (!base_.same_as(other.base_))
    throw Error(ErrorCode::InvalidInput, "subtracting tangent vectors at different base points");
  return Tangent(base_, values_ - other.values_);
}

double inner(const Tangent& a, const Tangent& b) {
  if (!a.base().same_as(b.base()))
    throw Error(ErrorCode::InvalidInput, "inner product of tangent vectors at different base points");
  return (a.values().array() * b.values().array()).sum();
}

Manifold Manifold::sphere(Index d) {
  if (d < 1) throw Error(ErrorCode::InvalidInput, "sphere dimension must be positive");
  return Manifold(ManifoldType::Sphere, d, 1);
}

Manifold Manifold::stiefel(Index d, Index r) {
  if (d < 1 || r < 1 || r > d)
    throw Error(ErrorCode::InvalidInput, "Stiefel manifold requires 1 <= r <= d");
  return Manifold(ManifoldType::Stiefel, d, r);
}

std::string Manifold::name() const {
  if (type_ == ManifoldType::Sphere) return "Sphere(" + std::to_string(d_) + ")";
  return "Stiefel(" + std::to_string(d_) + "," + std::to_string(r_) + ")";
}

void Manifold::check_shape(const Matrix& m, const char* what) const {
  if (m.rows() != d_ || m.cols() != r_)
    throw Error(ErrorCode::Shape, std::string(what) + ": expected " + std::to_string(d_) + "x" +
                                      std::to_string(r_) + ", got " + std::to_string(m.rows()) +
                                      "x" + std::to_string(m.cols()));
}

void Manifold::check_point(const Point& x, const char* what) const {
  if (!(x.manifold() == *this))
    throw Error(ErrorCode::Shape, std::string(what) + ": point lives on " + x.manifold().name() +
                                      ", expected " + name());
}

double Manifold::constraint_violation(const Matrix& values) const {
  if (type_ == ManifoldType::Sphere) return std::abs(values.norm() - 1.0);
  return (values.transpose() * values - Matrix::Identity(r_, r_)).norm();
}

double Manifold::tangency_violation(const Matrix& base, const Matrix& v) const {
  if (type_ == ManifoldType::Sphere) return std::abs(base.col(0).dot(v.col(0)));
  const Matrix xtv = base.transpose() * v;
  return (xtv + xtv.transpose()).norm();
}

Point Manifold::make_point(Matrix values) const {
  check_shape(values, "make_point");
  if (!values.allFinite()) throw Error(ErrorCode::InvalidInput, "make_point: non-finite entries");
  const double bound =
      type_ == ManifoldType::Sphere ? tol::kSphereUnitNorm : tol::kStiefelOrthonormality;
  if (constraint_violation(values) > bound)
    throw Error(ErrorCode::InvalidInput, "make_point: values violate the " + name() + " constraint");
  return Point(*this, std::move(values));
}

Point Manifold::retract_ambient(const Matrix& values) const {
  check_shape(values, "retract_ambient");
  if (type_ == ManifoldType::Sphere) {
    const double n = values.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw Error(ErrorCode::DegenerateGeometry, "cannot normalize a zero or non-finite vector");
    return Point(*this, values / n);
  }
  Eigen::HouseholderQR<Matrix> qr(values);
  Matrix q = qr.householderQ() * Matrix::Identity(d_, r_);
  // Fix column signs so that diag(R) is non-negative.
  const Matrix& packed = qr.matrixQR();
  for (Index j = 0; j < r_; ++j)
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  return Point(*this, std::move(q));
}

Point Manifold::random_point(std::mt19937_64& rng) const {
  return retract_ambient(gaussian_matrix(d_, r_, rng));
}

Tangent Manifold::make_tangent(const Point& base, Matrix values) const {
  check_point(base, "make_tangent");
  check_shape(values, "make_tangent");
  if (!values.allFinite()) throw Error(ErrorCode::InvalidInput, "make_tangent: non-finite entries");
  const double scale = type_ == ManifoldType::Sphere ? values.norm() : std::max(1.0, values.norm());
  const double bound = type_ == ManifoldType::Sphere ? tol::kSphereTangency : tol::kStiefelTangency;
  if (tangency_violation(base.values(), values) > bound * scale)
    throw Error(ErrorCode::InvalidInput, "make_tangent: vector is not tangent at the base point");
  return Tangent(base, std::move(values));
}

Tangent Manifold::zero_tangent(const Point& base) const {
  check_point(base, "zero_tangent");
  return Tangent(base, Matrix::Zero(d_, r_));
}

Tangent Manifold::project_tangent(const Point& x, const Matrix& ambient) const {
  check_point(x, "project_tangent");
  check_shape(ambient, "project_tangent");
  const Matrix& xv = x.values();
  if (type_ == ManifoldType::Sphere) {
    Matrix out = ambient - xv * (xv.col(0).dot(ambient.col(0)));
    return Tangent(x, std::move(out));
  }
  Matrix out = ambient - xv * sym(xv.transpose() * ambient);
  return Tangent(x, std::move(out));
}

Tangent Manifold::random_tangent(const Point& x, std::mt19937_64& rng) const {
  return project_tangent(x, gaussian_matrix(d_, r_, rng));
}

Point Manifold::exp(const Point& x, const Tangent& xi) const {
  check_point(x, "exp");
  check_shape(xi.values(), "exp");
  if (!xi.base().same_as(x))
    throw Error(ErrorCode::InvalidInput, "exp: tangent vector is anchored at a different point");
  if (!xi.values().allFinite())
    throw Error(ErrorCode::InvalidInput, "exp: non-finite tangent vector");

  const Matrix& xv = x.values();
  if (type_ == ManifoldType::Sphere) {
    const double t = xi.norm();
    if (t == 0.0) return x;
    Matrix y = std::cos(t) * xv + (std::sin(t) / t) * xi.values();
    y /= y.norm();
    return Point(*this, std::move(y));
  }
  return Point(*this, polar_factor(xv + xi.values()));
}

Tangent Manifold::log(const Point& x, const Point& y) const {
  check_point(x, "log");
  check_point(y, "log");
  if (x.same_as(y)) return zero_tangent(x);

  const Matrix& xv = x.values();
  const Matrix& yv = y.values();
  if (type_ == ManifoldType::Sphere) {
    const double c = xv.col(0).dot(yv.col(0));
    Matrix v = yv - c * xv;  // tangent component, norm sin(theta)
    const double s = v.norm();
    if (c < 0.0 && 1.0 + c <= tol::kAntipodal)
      throw Error(ErrorCode::DegenerateGeometry, "log: antipodal points on the sphere");
    if (s == 0.0) return zero_tangent(x);
    const double theta = std::atan2(s, c);
    v *= theta / s;
    return Tangent(x, std::move(v));
  }

  // Inverse polar retraction: find symmetric M with (X^T Y) M + M (Y^T X) = 2I,
  // then V = Y M - X.
  const Matrix b = xv.transpose() * yv;
  const Index r = r_;
  Eigen::EigenSolver<Matrix> eig(b, /*computeEigenvectors=*/false);
  const auto& lambda = eig.eigenvalues();
  double min_pair = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < r; ++i)
    for (Index j = i; j < r; ++j) min_pair = std::min(min_pair, std::abs(lambda(i) + lambda(j)));
  if (!(min_pair >= tol::kSylvesterPairSum))
    throw Error(ErrorCode::OutOfInjectivity,
                "log: inverse retraction is singular (X^T Y has eigenvalue pairs summing to ~0)");

  const Matrix eye = Matrix::Identity(r, r);
  Matrix kron = Matrix::Zero(r * r, r * r);
  // vec(B M) = (I kron B) vec(M); vec(M B^T) = (B kron I) vec(M).
  for (Index p = 0; p < r; ++p)
    for (Index q = 0; q < r; ++q) {
      kron.block(p * r, q * r, r, r) += eye(p, q) * b;
      kron.block(p * r, q * r, r, r) += b(p, q) * eye;
    }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>((2.0 * eye).eval().data(), r * r);
  Eigen::VectorXd m_vec = kron.partialPivLu().solve(rhs);
  Matrix m = sym(Eigen::Map<Matrix>(m_vec.data(), r, r));

  Eigen::SelfAdjointEigenSolver<Matrix> m_eig(m, Eigen::EigenvaluesOnly);
  if (!(m_eig.eigenvalues().minCoeff() > 0.0))
    throw Error(ErrorCode::OutOfInjectivity, "log: point is not in the image of the polar retraction");

  const Matrix v = yv * m - xv;
  return project_tangent(x, v);
}

Tangent Manifold::transport(const Point& x, const Point& y, const Tangent& v) const {
  check_point(x, "transport");
  check_point(y, "transport");
  if (!v.base().same_as(x))
    throw Error(ErrorCode::InvalidInput, "transport: vector is not anchored at the source point");
  if (x.same_as(y)) return Tangent(y, v.values());

  if (type_ == ManifoldType::Sphere) {
    const Tangent u = log(x, y);
    const double theta_sq = u.values().squaredNorm();
    if (theta_sq == 0.0) return Tangent(y, v.values());
    const Tangent w = log(y, x);
    const double coeff = inner(u, v) / theta_sq;
    Matrix out = v.values() - coeff * (u.values() + w.values());
    return Tangent(y, std::move(out));
  }
  return project_tangent(y, v.values());
}

double Manifold::distance(const Point& x, const Point& y) const { return log(x, y).norm(); }

}  // namespace rfed

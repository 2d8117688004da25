#pragma once

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <string>

namespace rfed {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ManifoldType { Sphere, Stiefel };

class Point;
class Tangent;

/// Unit sphere S^{d-1} (exact geodesics) or Stiefel St(d, r) (polar
/// retraction, its inverse, and projection transport standing in for the
/// exponential map, logarithm and parallel transport).
///
/// Points and tangent vectors are stored as d x r matrices; sphere points use
/// r = 1. All member functions are pure.
class Manifold {
 public:
  static Manifold sphere(Index d);
  static Manifold stiefel(Index d, Index r);

  ManifoldType type() const noexcept { return type_; }
  Index dim() const noexcept { return d_; }
  Index cols() const noexcept { return r_; }
  std::string name() const;

  friend bool operator==(const Manifold&, const Manifold&) = default;

  /// Wraps `values` as a point after checking the manifold constraint.
  Point make_point(Matrix values) const;
  /// Normalizes (sphere) or takes the thin QR factor (Stiefel).
  Point retract_ambient(const Matrix& values) const;
  Point random_point(std::mt19937_64& rng) const;

  /// Wraps `values` as a tangent vector at `base` after checking tangency.
  Tangent make_tangent(const Point& base, Matrix values) const;
  Tangent zero_tangent(const Point& base) const;
  Tangent project_tangent(const Point& x, const Matrix& ambient) const;
  Tangent random_tangent(const Point& x, std::mt19937_64& rng) const;

  Point exp(const Point& x, const Tangent& xi) const;
  Tangent log(const Point& x, const Point& y) const;
  Tangent transport(const Point& x, const Point& y, const Tangent& v) const;
  double distance(const Point& x, const Point& y) const;

  double constraint_violation(const Matrix& values) const;
  double tangency_violation(const Matrix& base, const Matrix& v) const;

 private:
  Manifold(ManifoldType type, Index d, Index r) : type_(type), d_(d), r_(r) {}

  void check_shape(const Matrix& m, const char* what) const;
  void check_point(const Point& x, const char* what) const;

  ManifoldType type_;
  Index d_;
  Index r_;
};

/// Immutable point on a manifold. Copies share storage.
class Point {
 public:
  const Manifold& manifold() const noexcept { return manifold_; }
  const Matrix& values() const noexcept { return *values_; }

  /// Same storage, or bitwise-equal values on the same manifold.
  bool same_as(const Point& other) const;

 private:
  friend class Manifold;
  Point(Manifold m, Matrix values)
      : manifold_(m), values_(std::make_shared<const Matrix>(std::move(values))) {}

  Manifold manifold_;
  std::shared_ptr<const Matrix> values_;
};

/// Tangent vector anchored at a point.
class Tangent {
 public:
  const Point& base() const noexcept { return base_; }
  const Matrix& values() const noexcept { return values_; }
  double norm() const { return values_.norm(); }

  Tangent operator*(double s) const { return Tangent(base_, values_ * s); }
  Tangent operator-() const { return Tangent(base_, -values_); }
  Tangent operator+(const Tangent& other) const;
  Tangent operator-(const Tangent& other) const;

 private:
  friend class Manifold;
  Tangent(Point base, Matrix values) : base_(std::move(base)), values_(std::move(values)) {}

  Point base_;
  Matrix values_;
};

inline Tangent operator*(double s, const Tangent& v) { return v * s; }

/// Frobenius inner product of two tangent vectors at the same base.
double inner(const Tangent& a, const Tangent& b);

/// (A + A^T) / 2
Matrix sym(const Matrix& a);

}  // namespace rfed

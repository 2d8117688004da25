#pragma once

#include "rfed/manifold.hpp"
#include "rfed/objectives.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rfed {

struct EigenOptions {
  double tol = 1e-10;
  int max_iters = 5000;
  std::uint64_t seed = 0x5eedULL;
};

/// Top-r eigen-subspace of a symmetric matrix.
struct GroundTruth {
  Matrix vectors;               // d x r, orthonormal columns
  Eigen::VectorXd eigenvalues;  // r values, descending
  double f_star = 0.0;          // -1/2 sum of the r eigenvalues
  double residual = 0.0;        // ||A X - X diag(lambda)||_F / ||A||_F
  int iterations = 0;
  bool small_eigengap = false;  // lambda_r - lambda_{r+1} <= 1e-8 lambda_1
};

/// Block orthogonal iteration with QR re-orthonormalization and a
/// Rayleigh-Ritz rotation every sweep. Throws NonConvergence (message carries
/// the last residual) after `max_iters`.
GroundTruth top_r_eigenvectors(const Matrix& a, Index r, const EigenOptions& opts = {});

/// Singular values of a tall or square matrix by one-sided Jacobi rotations,
/// sorted descending.
Eigen::VectorXd jacobi_singular_values(const Matrix& a);

/// Sum of principal angles (radians) between span(X) and span(Y); both bases
/// must have orthonormal columns.
double principal_angle_sum(const Matrix& x, const Matrix& y);

/// ||(1/n) sum_i grad f_i(x)||_F
double global_grad_norm(const Manifold& m, const GlobalObjective& f, const Point& x);

}  // namespace rfed

#pragma once

#include "rfed/manifold.hpp"

#include <Eigen/Dense>

#include <random>

namespace rfed::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  return qr.householderQ();
}

/// Q diag(spectrum) Q^T for a random orthogonal Q.
inline Matrix with_spectrum(const Eigen::VectorXd& spectrum, std::mt19937_64& rng, Matrix* basis = nullptr) {
  const Matrix q = random_orthogonal(spectrum.size(), rng);
  if (basis) *basis = q;
  return sym(q * spectrum.asDiagonal() * q.transpose());
}

/// Gram matrix of a random p x d Gaussian sample.
inline Matrix random_psd(Index d, Index p, std::mt19937_64& rng) {
  const Matrix x = gaussian(p, d, rng);
  return sym(x.transpose() * x);
}

inline Matrix unit(Index d, Index i) {
  Matrix e = Matrix::Zero(d, 1);
  e(i, 0) = 1.0;
  return e;
}

}  // namespace rfed::testing

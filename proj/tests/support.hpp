#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "regid/random.hpp"
#include "regid/spd.hpp"

namespace regid::test {

inline Eigen::MatrixXd random_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_gaussian(n, n, rng));
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

/// Random SPD matrix with log-uniform spectrum in [1/sqrt(cond), sqrt(cond)].
inline SpdMatrix random_spd(int n, std::mt19937_64& rng, double cond = 100.0) {
  Eigen::MatrixXd q = random_orthogonal(n, rng);
  Eigen::VectorXd lambda(n);
  double half_log = 0.5 * std::log(cond);
  for (int i = 0; i < n; ++i)
    lambda(i) = std::exp((2.0 * uniform01(rng) - 1.0) * half_log);
  Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();
  return SpdMatrix(((m + m.transpose()) * 0.5).eval());
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  Eigen::MatrixXd m = random_gaussian(n, n, rng);
  return ((m + m.transpose()) * 0.5).eval();
}

/// Random well-conditioned invertible matrix (for congruence tests).
inline Eigen::MatrixXd random_invertible(int n, std::mt19937_64& rng) {
  Eigen::MatrixXd q1 = random_orthogonal(n, rng);
  Eigen::MatrixXd q2 = random_orthogonal(n, rng);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = 0.5 + 1.5 * uniform01(rng);
  return q1 * s.asDiagonal() * q2;
}

}  // namespace regid::test

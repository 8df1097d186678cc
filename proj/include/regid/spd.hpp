#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "regid/errors.hpp"

namespace regid {

/// Distance metrics on the cone of symmetric positive-definite matrices.
///
/// Euclidean treats matrices as flat vectors (Frobenius norm of the
/// difference). LogEuclidean measures the Frobenius distance between matrix
/// logarithms. AffineInvariant is the geodesic distance
/// sqrt(sum log^2 lambda_k) where lambda_k are the eigenvalues of
/// a^{-1/2} b a^{-1/2}; it is invariant under congruence by any invertible
/// matrix and is the pipeline default.
enum class MetricKind { Euclidean, LogEuclidean, AffineInvariant };

inline std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::LogEuclidean: return "log_euclidean";
    case MetricKind::AffineInvariant: return "affine_invariant";
  }
  return "unknown";
}

inline MetricKind metric_from_string(const std::string& s) {
  if (s == "euclidean") return MetricKind::Euclidean;
  if (s == "log_euclidean" || s == "log-euclidean" || s == "logeuclidean")
    return MetricKind::LogEuclidean;
  if (s == "affine_invariant" || s == "affine-invariant" || s == "riemannian")
    return MetricKind::AffineInvariant;
  throw UsageError("unknown metric '" + s +
                   "' (expected euclidean, log_euclidean or "
                   "affine_invariant/riemannian)");
}

/// A validated symmetric positive-definite matrix.
///
/// Construction enforces symmetry to 1e-10 relative tolerance and strictly
/// positive eigenvalues. Matrices whose smallest eigenvalue falls below
/// 1e-12 times the largest are rejected, unless repair is requested, in which
/// case eps * trace/dim * I is added once before re-checking. Short-window
/// sample covariances are the intended beneficiary of the repair path.
class SpdMatrix {
 public:
  enum class Repair { Reject, Allow };

  static constexpr double kSymmetryTol = 1e-10;
  static constexpr double kEigenvalueFloor = 1e-12;  // relative to max eigenvalue
  static constexpr double kRepairEps = 1e-8;

  explicit SpdMatrix(Eigen::MatrixXd entries, Repair repair = Repair::Reject)
      : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
      throw ShapeError("SpdMatrix requires a square matrix, got " +
                       std::to_string(entries_.rows()) + "x" +
                       std::to_string(entries_.cols()));
    check_symmetric(entries_, "SpdMatrix");
    entries_ = ((entries_ + entries_.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_,
                                                      Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    double max_eig = es.eigenvalues().maxCoeff();
    if (min_eig <= kEigenvalueFloor * std::max(max_eig, 0.0)) {
      if (repair == Repair::Reject)
        throw DomainError("matrix is not positive definite (min eigenvalue " +
                          std::to_string(min_eig) + ")");
      double bump = kRepairEps * entries_.trace() / static_cast<double>(dim());
      entries_ += bump * Eigen::MatrixXd::Identity(dim(), dim());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(entries_,
                                                         Eigen::EigenvaluesOnly);
      min_eig = es2.eigenvalues().minCoeff();
      max_eig = es2.eigenvalues().maxCoeff();
      if (min_eig <= kEigenvalueFloor * std::max(max_eig, 0.0))
        throw DomainError(
            "matrix is not positive definite and could not be repaired "
            "(min eigenvalue " +
            std::to_string(min_eig) + " after repair)");
    }
  }

  static SpdMatrix identity(int n) {
    return SpdMatrix(Eigen::MatrixXd::Identity(n, n));
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  static void check_symmetric(const Eigen::MatrixXd& m, const char* who) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
        double tol =
            kSymmetryTol * std::max(1.0, std::max(std::abs(m(i, j)),
                                                  std::abs(m(j, i))));
        if (std::abs(m(i, j) - m(j, i)) > tol)
          throw DomainError(std::string(who) + ": matrix is not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      }
  }

 private:
  Eigen::MatrixXd entries_;
};

namespace detail {

struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline EigenDecomposition eigen_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw DomainError("symmetric eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// U f(diag) U^T with the result explicitly symmetrized.
template <typename Fn>
Eigen::MatrixXd spectral_map(const Eigen::MatrixXd& m, Fn&& fn) {
  auto [values, vectors] = eigen_sym(m);
  Eigen::VectorXd mapped = values.unaryExpr(std::forward<Fn>(fn));
  Eigen::MatrixXd out = vectors * mapped.asDiagonal() * vectors.transpose();
  return ((out + out.transpose()) * 0.5).eval();
}

inline Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& spd) {
  return spectral_map(spd, [](double x) { return std::sqrt(x); });
}

inline Eigen::MatrixXd matrix_exp_sym(const Eigen::MatrixXd& sym) {
  return spectral_map(sym, [](double x) { return std::exp(x); });
}

inline void check_positive_spectrum(const Eigen::VectorXd& values,
                                    const char* who) {
  if (values.minCoeff() <= 0.0)
    throw DomainError(std::string(who) + ": input has a non-positive eigenvalue (" +
                      std::to_string(values.minCoeff()) + ")");
}

}  // namespace detail

/// Principal matrix logarithm U diag(log lambda) U^T of an SPD matrix.
inline Eigen::MatrixXd matrix_log(const SpdMatrix& a) {
  auto [values, vectors] = detail::eigen_sym(a.entries());
  detail::check_positive_spectrum(values, "matrix_log");
  Eigen::VectorXd logged = values.array().log();
  Eigen::MatrixXd out = vectors * logged.asDiagonal() * vectors.transpose();
  return ((out + out.transpose()) * 0.5).eval();
}

/// Matrix exponential of a symmetric matrix; inverse of matrix_log.
inline SpdMatrix matrix_exp(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols())
    throw ShapeError("matrix_exp requires a square matrix");
  SpdMatrix::check_symmetric(s, "matrix_exp");
  Eigen::MatrixXd sym = (s + s.transpose()) * 0.5;
  return SpdMatrix(detail::matrix_exp_sym(sym));
}

/// U diag(lambda^{-1/2}) U^T; satisfies result * a * result = I.
inline SpdMatrix matrix_inv_sqrt(const SpdMatrix& a) {
  auto [values, vectors] = detail::eigen_sym(a.entries());
  detail::check_positive_spectrum(values, "matrix_inv_sqrt");
  Eigen::VectorXd mapped = values.array().rsqrt();
  Eigen::MatrixXd out = vectors * mapped.asDiagonal() * vectors.transpose();
  return SpdMatrix(((out + out.transpose()) * 0.5).eval());
}

/// Distance between two SPD matrices under the chosen metric.
///
/// The affine-invariant branch computes the eigenvalues of
/// a^{-1/2} b a^{-1/2} through the equivalent symmetric-definite generalized
/// eigenproblem b v = lambda a v.
inline double distance(const SpdMatrix& a, const SpdMatrix& b, MetricKind metric) {
  if (a.dim() != b.dim())
    throw ShapeError("distance: dimension mismatch " + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()));
  switch (metric) {
    case MetricKind::Euclidean:
      return (a.entries() - b.entries()).norm();
    case MetricKind::LogEuclidean:
      return (matrix_log(a) - matrix_log(b)).norm();
    case MetricKind::AffineInvariant: {
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
          b.entries(), a.entries(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
      if (ges.info() != Eigen::Success)
        throw DomainError("affine-invariant distance: generalized eigensolve failed");
      detail::check_positive_spectrum(ges.eigenvalues(), "distance");
      return std::sqrt(ges.eigenvalues().array().log().square().sum());
    }
  }
  throw UsageError("distance: unknown metric");
}

/// Parameters of the Karcher fixed-point iteration used by the
/// affine-invariant Fréchet mean.
struct KarcherOptions {
  double tolerance = 1e-9;
  int max_iterations = 100;
};

/// Fréchet mean of a non-empty family of SPD matrices under the chosen
/// metric: the minimizer of sum_k d(m_k, mu)^2.
///
/// Euclidean and log-Euclidean means are closed form. The affine-invariant
/// mean iterates mu <- mu^{1/2} exp(mean_k log(mu^{-1/2} m_k mu^{-1/2})) mu^{1/2}
/// from the log-Euclidean mean until the tangent-space gradient norm drops
/// below the tolerance.
inline SpdMatrix frechet_mean(std::span<const SpdMatrix> ms, MetricKind metric,
                              const KarcherOptions& options = {}) {
  if (ms.empty()) throw UsageError("frechet_mean: empty input");
  const int n = ms.front().dim();
  for (const auto& m : ms)
    if (m.dim() != n) throw ShapeError("frechet_mean: dimension mismatch");
  const double count = static_cast<double>(ms.size());

  if (metric == MetricKind::Euclidean) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : ms) acc += m.entries();
    return SpdMatrix(acc / count);
  }

  Eigen::MatrixXd log_acc = Eigen::MatrixXd::Zero(n, n);
  for (const auto& m : ms) log_acc += matrix_log(m);
  Eigen::MatrixXd log_mean = log_acc / count;
  if (metric == MetricKind::LogEuclidean)
    return SpdMatrix(detail::matrix_exp_sym(log_mean));

  // Karcher mean, initialized at the log-Euclidean mean.
  Eigen::MatrixXd mu = detail::matrix_exp_sym(log_mean);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    auto [values, vectors] = detail::eigen_sym(mu);
    detail::check_positive_spectrum(values, "frechet_mean");
    Eigen::VectorXd inv_sqrt = values.array().rsqrt();
    Eigen::VectorXd sqrt = values.array().sqrt();
    Eigen::MatrixXd mu_inv_sqrt =
        vectors * inv_sqrt.asDiagonal() * vectors.transpose();
    Eigen::MatrixXd mu_sqrt = vectors * sqrt.asDiagonal() * vectors.transpose();

    Eigen::MatrixXd tangent = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : ms) {
      Eigen::MatrixXd whitened = mu_inv_sqrt * m.entries() * mu_inv_sqrt;
      whitened = (whitened + whitened.transpose()) * 0.5;
      auto [wv, wu] = detail::eigen_sym(whitened);
      detail::check_positive_spectrum(wv, "frechet_mean");
      Eigen::VectorXd logged = wv.array().log();
      tangent += wu * logged.asDiagonal() * wu.transpose();
    }
    tangent /= count;
    tangent = ((tangent + tangent.transpose()) * 0.5).eval();

    if (tangent.norm() < options.tolerance) return SpdMatrix(mu);

    Eigen::MatrixXd step = detail::matrix_exp_sym(tangent);
    mu = mu_sqrt * step * mu_sqrt;
    mu = ((mu + mu.transpose()) * 0.5).eval();
  }
  throw ConvergenceError("frechet_mean: Karcher iteration did not converge in " +
                             std::to_string(options.max_iterations) +
                             " iterations",
                         mu);
}

inline SpdMatrix frechet_mean(const std::vector<SpdMatrix>& ms, MetricKind metric,
                              const KarcherOptions& options = {}) {
  return frechet_mean(std::span<const SpdMatrix>(ms), metric, options);
}

}  // namespace regid

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regid/errors.hpp"
#include "regid/series.hpp"
#include "regid/spd.hpp"

namespace regid {

constexpr double kDefaultShrinkage = 0.01;

/// The pool of per-window covariance matrices extracted from one series.
/// starts[j] is the first time index of window j; mats[j] is its (possibly
/// dimension-reduced) covariance. basis holds the projection used by
/// reduce_dim (N x n), or is empty for full-dimension pools.
struct WindowedCovariances {
  int window = 0;
  std::vector<long> starts;
  std::vector<SpdMatrix> mats;
  Eigen::MatrixXd basis;

  std::size_t count() const { return mats.size(); }
  int dim() const { return mats.empty() ? 0 : mats.front().dim(); }
};

/// Convex shrinkage toward the scaled identity: (1-s) S + s (trace(S)/N) I.
/// A sample covariance with zero trace (a constant window) carries no scale
/// of its own, so the target falls back to the identity.
inline Eigen::MatrixXd shrink_covariance(const Eigen::MatrixXd& sample,
                                         double shrinkage) {
  if (shrinkage < 0.0 || shrinkage > 1.0)
    throw UsageError("shrinkage must lie in [0,1], got " +
                     std::to_string(shrinkage));
  const int n = static_cast<int>(sample.rows());
  double target = sample.trace() / static_cast<double>(n);
  if (!(target > 0.0)) target = 1.0;
  return (1.0 - shrinkage) * sample +
         shrinkage * target * Eigen::MatrixXd::Identity(n, n);
}

/// Splits the series into floor(T/w) consecutive non-overlapping windows and
/// returns their shrunk sample covariances (denominator w-1, window mean
/// subtracted). Trailing T mod w samples are discarded.
inline WindowedCovariances windowed_covariances(const MultivariateSeries& z,
                                                int window,
                                                double shrinkage = kDefaultShrinkage) {
  z.validate();
  if (window < 2)
    throw UsageError("window must be >= 2, got " + std::to_string(window));
  const long m = z.length() / window;
  if (m < 2)
    throw UsageError("series of length " + std::to_string(z.length()) +
                     " yields " + std::to_string(m) + " windows of size " +
                     std::to_string(window) + "; need at least 2");

  WindowedCovariances out;
  out.window = window;
  out.starts.reserve(m);
  out.mats.reserve(m);
  const int n = z.n_vars();
  for (long j = 0; j < m; ++j) {
    const long start = j * window;
    Eigen::MatrixXd block = z.data.middleRows(start, window);
    Eigen::RowVectorXd mean = block.colwise().mean();
    block.rowwise() -= mean;
    Eigen::MatrixXd sample =
        block.transpose() * block / static_cast<double>(window - 1);
    sample = ((sample + sample.transpose()) * 0.5).eval();
    Eigen::MatrixXd shrunk = shrink_covariance(sample, shrinkage);
    try {
      out.mats.emplace_back(shrunk, SpdMatrix::Repair::Allow);
    } catch (const DomainError& e) {
      throw DomainError("window " + std::to_string(j) + " (t=" +
                        std::to_string(start) + ".." +
                        std::to_string(start + window) +
                        "): covariance is not repairable to SPD: " + e.what());
    }
    out.starts.push_back(start);
    (void)n;
  }
  return out;
}

/// Projects every window covariance onto the top-n eigenvector basis V of the
/// pool's Euclidean mean, yielding the pool {V^T S_j V}. One common basis
/// keeps the reduced matrices in a single comparable space; V is kept on the
/// result for provenance.
inline WindowedCovariances reduce_dim(const WindowedCovariances& wc, int n) {
  const int full = wc.dim();
  if (wc.mats.empty()) throw UsageError("reduce_dim: empty pool");
  if (n < 2 || n >= full)
    throw UsageError("reduce_dim: target dimension " + std::to_string(n) +
                     " must satisfy 2 <= n < " + std::to_string(full));

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(full, full);
  for (const auto& m : wc.mats) mean += m.entries();
  mean /= static_cast<double>(wc.mats.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mean);
  if (es.info() != Eigen::Success)
    throw DomainError("reduce_dim: eigendecomposition of the pooled mean failed");

  // Eigen sorts eigenvalues ascending; take the trailing n columns, largest first.
  Eigen::MatrixXd basis(full, n);
  for (int c = 0; c < n; ++c) basis.col(c) = es.eigenvectors().col(full - 1 - c);

  WindowedCovariances out;
  out.window = wc.window;
  out.starts = wc.starts;
  out.basis = basis;
  out.mats.reserve(wc.mats.size());
  for (std::size_t j = 0; j < wc.mats.size(); ++j) {
    Eigen::MatrixXd reduced = basis.transpose() * wc.mats[j].entries() * basis;
    reduced = ((reduced + reduced.transpose()) * 0.5).eval();
    try {
      out.mats.emplace_back(reduced, SpdMatrix::Repair::Allow);
    } catch (const DomainError& e) {
      throw DomainError("reduce_dim: window " + std::to_string(j) +
                        " lost positive definiteness: " + e.what());
    }
  }
  return out;
}

}  // namespace regid

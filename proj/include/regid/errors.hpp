#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace regid {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Caller violated a precondition (bad argument, out-of-range parameter).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

/// Incompatible matrix/series dimensions.
class ShapeError : public UsageError {
 public:
  explicit ShapeError(const std::string& what) : UsageError(what) {}
};

/// Input data could not be ingested (I/O, malformed CSV/JSON, non-finite cells).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

/// Numeric domain violation: a matrix that must be SPD is not, a log of a
/// non-positive eigenvalue was requested, and so on.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// An iterative scheme failed to converge. Carries the last iterate so the
/// caller can inspect or reuse it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}

  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::MatrixXd last_iterate_;
};

/// A least-squares fit could not be carried out (rank deficiency, degenerate
/// residuals).
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error(what) {}
};

/// A simulated system diverged.
class StabilityError : public Error {
 public:
  explicit StabilityError(const std::string& what) : Error(what) {}
};

}  // namespace regid

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regid/errors.hpp"
#include "regid/random.hpp"
#include "regid/series.hpp"

namespace regid {

/// Functional form of a cross-variable coupling. Polynomial and exponential
/// couplings are bounded variants so that stability of the linearized system
/// carries over to the nonlinear one:
///   linear:       f(x) = x
///   polynomial:   f(x) = clamp(x |x|^{degree-1}, -clip, clip)
///   exponential:  f(x) = sign(x) (1 - e^{-|x|/scale}) scale
enum class CouplingFunc { Linear, Polynomial, Exponential };

inline std::string to_string(CouplingFunc f) {
  switch (f) {
    case CouplingFunc::Linear: return "linear";
    case CouplingFunc::Polynomial: return "polynomial";
    case CouplingFunc::Exponential: return "exponential";
  }
  return "unknown";
}

inline CouplingFunc coupling_func_from_string(const std::string& s) {
  if (s == "linear") return CouplingFunc::Linear;
  if (s == "polynomial") return CouplingFunc::Polynomial;
  if (s == "exponential") return CouplingFunc::Exponential;
  throw UsageError("unknown coupling function '" + s + "'");
}

struct Coupling {
  int source = 0;
  int target = 0;
  double coeff = 0.0;
  int lag = 1;
  CouplingFunc func = CouplingFunc::Linear;
  double param = 0.0;  // polynomial degree or exponential scale
};

/// One regime of the schedule: active from `start` until the next regime.
/// mean_shift is added to the emitted values, variance_scale multiplies their
/// variance (values are scaled by its square root), and noise_scale multiplies
/// the innovation standard deviation inside the recurrence.
struct RegimeSpec {
  long start = 0;
  Eigen::VectorXd mean_shift;
  Eigen::VectorXd variance_scale;
  Eigen::VectorXd noise_scale;
};

/// Full description of a synthetic experiment:
///   Z_{j,t} = a_j Z_{j,t-1} + sum_i c_i f_i(Z_{i,t-tau_i}) + eta_{j,t}
/// with regime-dependent innovation scale and per-regime affine observation.
struct SynthSpec {
  int n_vars = 0;
  long length = 0;
  std::vector<Coupling> couplings;
  std::vector<double> autocoeffs;
  std::vector<double> noise_std;
  std::vector<RegimeSpec> regimes;
  std::uint64_t seed = 0;
  double clip = 10.0;
  std::string version;

  int max_lag() const {
    int m = 1;
    for (const auto& c : couplings) m = std::max(m, c.lag);
    return m;
  }

  void validate() const;
};

/// Known answers for a generated series: the coupling adjacency (no
/// self-loops; autoregression does not count), the regime change points and
/// the per-step regime labels.
struct GroundTruth {
  Eigen::MatrixXi adjacency;
  std::vector<long> rcps;
  std::vector<int> regime_labels;
};

namespace detail {

inline double apply_coupling(const Coupling& c, double x, double clip) {
  switch (c.func) {
    case CouplingFunc::Linear:
      return x;
    case CouplingFunc::Polynomial: {
      double v = x * std::pow(std::abs(x), c.param - 1.0);
      return std::clamp(v, -clip, clip);
    }
    case CouplingFunc::Exponential:
      return std::copysign((1.0 - std::exp(-std::abs(x) / c.param)) * c.param, x);
  }
  return x;
}

/// Slope of the coupling function at the origin, used for the linearized
/// stability check.
inline double coupling_slope(const Coupling& c) {
  switch (c.func) {
    case CouplingFunc::Linear: return 1.0;
    case CouplingFunc::Polynomial: return c.param > 1.0 ? 0.0 : 1.0;
    case CouplingFunc::Exponential: return 1.0;
  }
  return 1.0;
}

inline double companion_spectral_radius(const SynthSpec& spec) {
  const int n = spec.n_vars;
  const int p = spec.max_lag();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * p, n * p);
  for (int j = 0; j < n; ++j) companion(j, j) = spec.autocoeffs[j];
  for (const auto& c : spec.couplings)
    companion(c.target, (c.lag - 1) * n + c.source) += c.coeff * coupling_slope(c);
  for (int l = 1; l < p; ++l)
    for (int j = 0; j < n; ++j) companion(l * n + j, (l - 1) * n + j) = 1.0;
  return companion.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

inline void SynthSpec::validate() const {
  if (n_vars < 2) throw UsageError("SynthSpec: n_vars must be >= 2");
  if (length < 2) throw UsageError("SynthSpec: length must be >= 2");
  if (autocoeffs.size() != static_cast<std::size_t>(n_vars) ||
      noise_std.size() != static_cast<std::size_t>(n_vars))
    throw UsageError("SynthSpec: autocoeffs/noise_std must have n_vars entries");
  for (double a : autocoeffs)
    if (std::abs(a) >= 1.0)
      throw UsageError("SynthSpec: autoregressive coefficients need |a| < 1");
  for (double s : noise_std)
    if (s <= 0.0) throw UsageError("SynthSpec: noise_std must be positive");
  for (const auto& c : couplings) {
    if (c.source < 0 || c.source >= n_vars || c.target < 0 || c.target >= n_vars)
      throw UsageError("SynthSpec: coupling variable index out of range");
    if (c.source == c.target)
      throw UsageError("SynthSpec: self-couplings belong in autocoeffs");
    if (c.lag < 1) throw UsageError("SynthSpec: coupling lags must be >= 1");
    if (c.func == CouplingFunc::Polynomial && c.param < 1.0)
      throw UsageError("SynthSpec: polynomial degree must be >= 1");
    if (c.func == CouplingFunc::Exponential && c.param <= 0.0)
      throw UsageError("SynthSpec: exponential scale must be positive");
  }
  if (regimes.empty()) throw UsageError("SynthSpec: at least one regime required");
  if (regimes.front().start != 0)
    throw UsageError("SynthSpec: first regime must start at 0");
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    const auto& reg = regimes[r];
    if (r > 0 && reg.start <= regimes[r - 1].start)
      throw UsageError("SynthSpec: regime starts must be strictly increasing");
    if (reg.start >= length)
      throw UsageError("SynthSpec: regime start beyond series length");
    if (reg.mean_shift.size() != n_vars || reg.variance_scale.size() != n_vars ||
        reg.noise_scale.size() != n_vars)
      throw UsageError("SynthSpec: regime vectors must have n_vars entries");
    if ((reg.variance_scale.array() <= 0.0).any() ||
        (reg.noise_scale.array() <= 0.0).any())
      throw UsageError("SynthSpec: variance/noise scales must be positive");
  }
  if (clip <= 0.0) throw UsageError("SynthSpec: clip must be positive");
  double radius = detail::companion_spectral_radius(*this);
  if (radius >= 1.0)
    throw UsageError("SynthSpec: linearized system is unstable (spectral radius " +
                     std::to_string(radius) + ")");
}

/// Index of the regime active at output step t.
inline int regime_at(const SynthSpec& spec, long t) {
  int r = 0;
  for (std::size_t i = 1; i < spec.regimes.size(); ++i)
    if (t >= spec.regimes[i].start) r = static_cast<int>(i);
  return r;
}

/// Simulates the recurrence and returns the observed series plus its ground
/// truth. The first max_lag()+1 steps are burn-in from zero initial values
/// and are not part of the emitted length.
inline std::pair<MultivariateSeries, GroundTruth> generate(const SynthSpec& spec) {
  spec.validate();
  const int n = spec.n_vars;
  const long burn = spec.max_lag() + 1;
  const long total = burn + spec.length;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(total, n);
  for (long step = 0; step < total; ++step) {
    long t_out = step - burn;  // output-relative time; negative during burn-in
    const auto& regime = spec.regimes[regime_at(spec, std::max(t_out, 0L))];
    for (int j = 0; j < n; ++j) {
      double v = normal(rng) * spec.noise_std[j] * regime.noise_scale(j);
      if (step >= 1) v += spec.autocoeffs[j] * raw(step - 1, j);
      for (const auto& c : spec.couplings) {
        if (c.target != j || step < c.lag) continue;
        v += c.coeff * detail::apply_coupling(c, raw(step - c.lag, c.source),
                                              spec.clip);
      }
      if (std::abs(v) > 1e6)
        throw StabilityError("generate: series diverged at output step " +
                             std::to_string(t_out) + " (variable " +
                             std::to_string(j) + ")");
      raw(step, j) = v;
    }
  }

  MultivariateSeries series;
  for (int j = 0; j < n; ++j) series.names.push_back("z" + std::to_string(j));
  series.data.resize(spec.length, n);

  GroundTruth truth;
  truth.adjacency = Eigen::MatrixXi::Zero(n, n);
  for (const auto& c : spec.couplings) truth.adjacency(c.source, c.target) = 1;
  for (std::size_t r = 1; r < spec.regimes.size(); ++r)
    truth.rcps.push_back(spec.regimes[r].start);
  truth.regime_labels.resize(spec.length);

  for (long t = 0; t < spec.length; ++t) {
    int r = regime_at(spec, t);
    truth.regime_labels[t] = r;
    const auto& regime = spec.regimes[r];
    for (int j = 0; j < n; ++j)
      series.data(t, j) = regime.mean_shift(j) +
                          std::sqrt(regime.variance_scale(j)) * raw(burn + t, j);
  }
  return {std::move(series), std::move(truth)};
}

/// The canonical synthetic experiment driven by the reproduction suite:
/// four variables over 1800 steps, three equal regimes with change points at
/// 600 and 1200, and a four-edge coupling graph mixing linear, polynomial and
/// exponential links. Every constant is an artifact choice, versioned here.
inline SynthSpec default_paper_spec() {
  SynthSpec spec;
  spec.version = "default-synth-v1";
  spec.n_vars = 4;
  spec.length = 1800;
  spec.seed = 20240507;
  spec.clip = 10.0;
  spec.autocoeffs = {0.5, 0.4, 0.45, 0.35};
  spec.noise_std = {1.0, 1.0, 1.0, 1.0};
  spec.couplings = {
      {0, 1, 0.8, 1, CouplingFunc::Linear, 0.0},
      {1, 2, 0.6, 2, CouplingFunc::Polynomial, 2.0},
      {2, 3, 0.8, 1, CouplingFunc::Exponential, 1.5},
      {0, 2, 0.5, 2, CouplingFunc::Linear, 0.0},
  };

  auto vec = [](double a, double b, double c, double d) {
    Eigen::VectorXd v(4);
    v << a, b, c, d;
    return v;
  };
  spec.regimes = {
      {0, vec(0, 0, 0, 0), vec(1, 1, 1, 1), vec(1, 1, 1, 1)},
      {600, vec(1, -0.8, 0.8, -1), vec(0.5, 0.25, 0.45, 0.3),
       vec(0.8, 0.7, 0.9, 0.75)},
      {1200, vec(-0.8, 0.8, -1, 0.8), vec(0.12, 0.1, 0.08, 0.15),
       vec(0.65, 0.5, 0.6, 0.55)},
  };
  return spec;
}

}  // namespace regid

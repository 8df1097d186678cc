#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "regid/clustering.hpp"
#include "regid/covariance.hpp"
#include "regid/errors.hpp"
#include "regid/series.hpp"

namespace regid {

/// Fitted VAR(p): x_t = intercept + sum_l coefficients[l-1] x_{t-l} + e_t.
/// coefficients[l](i, j) is the effect of variable j at lag l+1 on variable i.
struct VarModel {
  int n_vars = 0;
  int order = 0;
  std::vector<Eigen::MatrixXd> coefficients;
  Eigen::VectorXd intercept;
  SpdMatrix residual_cov = SpdMatrix::identity(1);
  Eigen::VectorXd rss;        // per-equation residual sum of squares
  long n_obs = 0;             // effective (post-lag) sample count
  std::vector<Eigen::MatrixXd> coef_se;  // standard errors, same layout
  double log_det_sigma_ml = 0.0;         // ln|E'E / n_obs|, for AIC/BIC
};

enum class OrderCriterion { Aic, Bic };

namespace detail {

/// Half-open [start, end) spans of usable raw data. Lagged regressors are
/// always drawn from inside the same span, so rows never straddle a span
/// boundary.
using Spans = std::vector<std::pair<long, long>>;

struct VarDesign {
  Eigen::MatrixXd regressors;  // rows x (n_vars * p + 1), intercept first
  Eigen::MatrixXd targets;     // rows x n_vars
  long rows = 0;
};

inline VarDesign build_design(const Eigen::MatrixXd& data, const Spans& spans,
                              int p, int align_p = -1) {
  // align_p >= p reserves that many leading rows per span, so fits with
  // different orders share the same target rows (needed by order selection).
  const int reserve = std::max(align_p, p);
  const int n = static_cast<int>(data.cols());
  long rows = 0;
  for (auto [start, end] : spans) rows += std::max(0L, end - start - reserve);

  VarDesign design;
  design.rows = rows;
  design.regressors.resize(rows, n * p + 1);
  design.targets.resize(rows, n);
  long r = 0;
  for (auto [start, end] : spans) {
    for (long t = start + reserve; t < end; ++t, ++r) {
      design.regressors(r, 0) = 1.0;
      for (int l = 1; l <= p; ++l)
        design.regressors.block(r, 1 + (l - 1) * n, 1, n) = data.row(t - l);
      design.targets.row(r) = data.row(t);
    }
  }
  return design;
}

struct OlsFit {
  Eigen::MatrixXd coef;      // q x n_vars
  Eigen::VectorXd rss;       // per equation
  Eigen::MatrixXd residuals;
  Eigen::MatrixXd xtx_inverse;
};

inline OlsFit solve_ols(const VarDesign& design, const std::string& context) {
  const long q = design.regressors.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.regressors);
  if (qr.rank() < q)
    throw EstimationError(context + ": rank-deficient regressor matrix (rank " +
                          std::to_string(qr.rank()) + " of " + std::to_string(q) +
                          "); all equations share these regressors");
  OlsFit fit;
  fit.coef = qr.solve(design.targets);
  fit.residuals = design.targets - design.regressors * fit.coef;
  fit.rss = fit.residuals.colwise().squaredNorm();
  Eigen::MatrixXd xtx = design.regressors.transpose() * design.regressors;
  fit.xtx_inverse = xtx.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  return fit;
}

inline void check_fit_feasible(long usable_rows, int n, int p,
                               const std::string& context) {
  if (p < 1) throw UsageError(context + ": order must be >= 1");
  if (usable_rows <= static_cast<long>(n) * p + 1)
    throw UsageError(context + ": " + std::to_string(usable_rows) +
                     " usable rows cannot identify " +
                     std::to_string(n * p + 1) + " parameters per equation");
}

inline VarModel fit_var_design(const Eigen::MatrixXd& data, const Spans& spans,
                               int p, const std::string& context) {
  const int n = static_cast<int>(data.cols());
  long usable = 0;
  for (auto [start, end] : spans) usable += std::max(0L, end - start - p);
  check_fit_feasible(usable, n, p, context);

  VarDesign design = build_design(data, spans, p);
  OlsFit fit = solve_ols(design, context);

  VarModel model;
  model.n_vars = n;
  model.order = p;
  model.n_obs = design.rows;
  model.intercept = fit.coef.row(0).transpose();
  model.coefficients.reserve(p);
  for (int l = 0; l < p; ++l)
    model.coefficients.push_back(fit.coef.block(1 + l * n, 0, n, n).transpose());
  model.rss = fit.rss;

  const long dof = design.rows - (static_cast<long>(n) * p + 1);
  Eigen::VectorXd sigma2 = fit.rss / static_cast<double>(dof);
  for (int l = 0; l < p; ++l) {
    Eigen::MatrixXd se(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        se(i, j) = std::sqrt(sigma2(i) * fit.xtx_inverse(1 + l * n + j, 1 + l * n + j));
    model.coef_se.push_back(se);
  }

  Eigen::MatrixXd sigma_ml =
      fit.residuals.transpose() * fit.residuals / static_cast<double>(design.rows);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_ml);
  model.log_det_sigma_ml = ldlt.vectorD().array().max(1e-300).log().sum();

  Eigen::MatrixXd sigma =
      fit.residuals.transpose() * fit.residuals / static_cast<double>(dof);
  model.residual_cov = SpdMatrix(shrink_covariance(
                                     ((sigma + sigma.transpose()) * 0.5).eval(),
                                     kDefaultShrinkage),
                                 SpdMatrix::Repair::Allow);
  return model;
}

}  // namespace detail

/// Per-equation OLS estimate of a VAR(p) with intercept.
inline VarModel fit_var(const MultivariateSeries& z, int p) {
  z.validate();
  return detail::fit_var_design(z.data, {{0, z.length()}}, p, "fit_var");
}

/// Multivariate information criterion: ln|Sigma_ML| + penalty(n_params)/T.
inline int select_order(const MultivariateSeries& z, int p_max,
                        OrderCriterion criterion) {
  z.validate();
  if (p_max < 1) throw UsageError("select_order: p_max must be >= 1");
  const int n = z.n_vars();
  long usable = z.length() - p_max;
  detail::check_fit_feasible(usable, n, p_max, "select_order");

  int best_p = 1;
  double best_score = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    detail::VarDesign design =
        detail::build_design(z.data, {{0, z.length()}}, p, p_max);
    detail::OlsFit fit = detail::solve_ols(design, "select_order");
    Eigen::MatrixXd sigma_ml =
        fit.residuals.transpose() * fit.residuals / static_cast<double>(design.rows);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_ml);
    double log_det = ldlt.vectorD().array().max(1e-300).log().sum();
    double n_params = static_cast<double>(n) * (static_cast<double>(n) * p + 1);
    double t = static_cast<double>(design.rows);
    double penalty = (criterion == OrderCriterion::Aic)
                         ? 2.0 * n_params / t
                         : std::log(t) * n_params / t;
    double score = log_det + penalty;
    if (score < best_score - 1e-12) {  // ties keep the smaller order
      best_score = score;
      best_p = p;
    }
  }
  return best_p;
}

namespace detail {

/// F-test of the restriction "all p lags of `source` are absent from the
/// `target` equation" against the unrestricted design.
inline double granger_pvalue(const Eigen::MatrixXd& data, const Spans& spans,
                             int source, int target, int p,
                             const OlsFit& unrestricted, long rows) {
  const int n = static_cast<int>(data.cols());
  VarDesign design = build_design(data, spans, p);

  // Restricted design: drop the columns of `source` at every lag.
  Eigen::MatrixXd restricted(rows, design.regressors.cols() - p);
  long c = 0;
  for (long col = 0; col < design.regressors.cols(); ++col) {
    if (col >= 1 && (col - 1) % n == source) continue;
    restricted.col(c++) = design.regressors.col(col);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(restricted);
  if (qr.rank() < restricted.cols())
    throw EstimationError("granger_test: rank-deficient restricted regressors for "
                          "equation " + std::to_string(target));
  Eigen::VectorXd coef = qr.solve(design.targets.col(target));
  double rss_r = (design.targets.col(target) - restricted * coef).squaredNorm();
  double rss_u = unrestricted.rss(target);

  const double dof = static_cast<double>(rows - (static_cast<long>(n) * p + 1));
  if (rss_u <= 0.0)
    throw DomainError("granger_test: zero unrestricted residual sum of squares "
                      "for equation " + std::to_string(target));
  double f = ((rss_r - rss_u) / static_cast<double>(p)) / (rss_u / dof);
  f = std::max(f, 0.0);  // rss_r >= rss_u analytically; clamp roundoff
  boost::math::fisher_f_distribution<double> dist(static_cast<double>(p), dof);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace detail

/// p-value of the Granger F-test for source -> target at the given order.
inline double granger_test(const MultivariateSeries& z, int source, int target,
                           int p) {
  z.validate();
  const int n = z.n_vars();
  if (source == target)
    throw UsageError("granger_test: source and target must differ");
  if (source < 0 || source >= n || target < 0 || target >= n)
    throw UsageError("granger_test: variable index out of range");
  detail::Spans spans{{0, z.length()}};
  long usable = z.length() - p;
  detail::check_fit_feasible(usable, n, p, "granger_test");
  detail::VarDesign design = detail::build_design(z.data, spans, p);
  detail::OlsFit fit = detail::solve_ols(design, "granger_test");
  return detail::granger_pvalue(z.data, spans, source, target, p, fit,
                                design.rows);
}

struct CausalEdge {
  int source = 0;
  int target = 0;
  double p_value = 1.0;
  int min_lag = 1;
};

/// Directed graph over the series variables; an edge is present iff its
/// Granger p-value fell below alpha.
struct CausalGraph {
  std::vector<std::string> names;
  std::vector<CausalEdge> edges;
  double alpha = 0.05;
  int order = 1;

  bool has_edge(int source, int target) const {
    for (const auto& e : edges)
      if (e.source == source && e.target == target) return true;
    return false;
  }
};

struct GraphOptions {
  double alpha = 0.05;
  std::optional<int> order;  // empty -> BIC selection up to max_order
  int max_order = 10;
  bool bonferroni = false;
};

namespace detail {

inline int pick_order(const Eigen::MatrixXd& data, const Spans& spans,
                      const GraphOptions& options, const std::string& context) {
  if (options.order) {
    if (*options.order < 1) throw UsageError(context + ": order must be >= 1");
    return *options.order;
  }
  const int n = static_cast<int>(data.cols());
  long total = 0;
  for (auto [s, e] : spans) total += e - s;
  // Largest feasible candidate order, capped at max_order.
  int p_max = 1;
  for (int p = 1; p <= options.max_order; ++p) {
    long usable = 0;
    for (auto [s, e] : spans) usable += std::max(0L, e - s - p);
    if (usable > static_cast<long>(n) * p + 1) p_max = p;
  }
  int best_p = 1;
  double best_score = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    VarDesign design = build_design(data, spans, p, p_max);
    if (design.rows <= static_cast<long>(n) * p + 1) break;
    OlsFit fit = solve_ols(design, context);
    Eigen::MatrixXd sigma_ml =
        fit.residuals.transpose() * fit.residuals / static_cast<double>(design.rows);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_ml);
    double log_det = ldlt.vectorD().array().max(1e-300).log().sum();
    double n_params = static_cast<double>(n) * (static_cast<double>(n) * p + 1);
    double t = static_cast<double>(design.rows);
    double score = log_det + std::log(t) * n_params / t;
    if (score < best_score - 1e-12) {
      best_score = score;
      best_p = p;
    }
  }
  return best_p;
}

/// Reported lag for a discovered edge: the smallest lag whose coefficient is
/// individually significant at alpha (two-sided t), falling back to the lag
/// with the largest |t|.
inline int edge_lag(const OlsFit& fit, int n, int p, long rows, int source,
                    int target, double alpha) {
  const long dof = rows - (static_cast<long>(n) * p + 1);
  double sigma2 = fit.rss(target) / static_cast<double>(dof);
  boost::math::students_t_distribution<double> dist(static_cast<double>(dof));
  int best_lag = 1;
  double best_abs_t = -1.0;
  for (int l = 0; l < p; ++l) {
    long col = 1 + static_cast<long>(l) * n + source;
    double se = std::sqrt(sigma2 * fit.xtx_inverse(col, col));
    if (se <= 0.0) continue;
    double t_stat = fit.coef(col, target) / se;
    double pv = 2.0 * boost::math::cdf(boost::math::complement(
                          dist, std::abs(t_stat)));
    if (pv < alpha) return l + 1;
    if (std::abs(t_stat) > best_abs_t) {
      best_abs_t = std::abs(t_stat);
      best_lag = l + 1;
    }
  }
  return best_lag;
}

inline CausalGraph discover_graph_design(const Eigen::MatrixXd& data,
                                         const std::vector<std::string>& names,
                                         const Spans& spans,
                                         const GraphOptions& options,
                                         const std::string& context) {
  const int n = static_cast<int>(data.cols());
  if (n < 2) throw UsageError(context + ": need at least 2 variables");
  if (options.alpha <= 0.0 || options.alpha >= 1.0)
    throw UsageError(context + ": alpha must lie in (0,1)");

  const int p = pick_order(data, spans, options, context);
  long usable = 0;
  for (auto [s, e] : spans) usable += std::max(0L, e - s - p);
  check_fit_feasible(usable, n, p, context);

  VarDesign design = build_design(data, spans, p);
  OlsFit fit = solve_ols(design, context);

  double threshold = options.alpha;
  if (options.bonferroni) threshold /= static_cast<double>(n) * (n - 1);

  CausalGraph graph;
  graph.names = names;
  graph.alpha = options.alpha;
  graph.order = p;
  for (int source = 0; source < n; ++source) {
    for (int target = 0; target < n; ++target) {
      if (source == target) continue;
      double pv = granger_pvalue(data, spans, source, target, p, fit, design.rows);
      if (pv < threshold) {
        int lag = edge_lag(fit, n, p, design.rows, source, target, options.alpha);
        graph.edges.push_back({source, target, pv, lag});
      }
    }
  }
  return graph;
}

}  // namespace detail

/// Whole-series causal discovery: the Granger F-test over every ordered pair,
/// with per-test alpha (Bonferroni optional).
inline CausalGraph discover_graph(const MultivariateSeries& z,
                                  const GraphOptions& options = {}) {
  z.validate();
  return detail::discover_graph_design(z.data, z.names, {{0, z.length()}},
                                       options, "discover_graph");
}

struct RegimeGraphs {
  std::vector<std::pair<int, CausalGraph>> graphs;  // sorted by regime id
  std::vector<std::string> warnings;                // skipped regimes
};

/// Causal discovery per regime. All segments sharing a regime id pool their
/// rows; the first p rows of each segment serve only as regressors, so lag
/// windows never straddle a change point.
inline RegimeGraphs regime_wise_graphs(const MultivariateSeries& z,
                                       const RegimeSegmentation& seg,
                                       const GraphOptions& options = {}) {
  z.validate();
  if (seg.segments.empty())
    throw UsageError("regime_wise_graphs: empty segmentation");

  std::vector<int> regime_ids;
  for (const auto& s : seg.segments)
    if (std::find(regime_ids.begin(), regime_ids.end(), s.regime) ==
        regime_ids.end())
      regime_ids.push_back(s.regime);
  std::sort(regime_ids.begin(), regime_ids.end());

  RegimeGraphs out;
  for (int regime : regime_ids) {
    detail::Spans spans;
    for (const auto& s : seg.segments) {
      if (s.regime != regime) continue;
      long end = std::min(s.end, z.length());
      if (s.start < end) spans.push_back({s.start, end});
    }
    try {
      out.graphs.emplace_back(
          regime, detail::discover_graph_design(
                      z.data, z.names, spans, options,
                      "regime " + std::to_string(regime)));
    } catch (const UsageError& e) {
      out.warnings.push_back("regime " + std::to_string(regime) +
                             " skipped: " + e.what());
    }
  }
  if (out.graphs.empty())
    throw UsageError("regime_wise_graphs: every regime was too short to fit");
  return out;
}

}  // namespace regid

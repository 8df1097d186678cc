#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regid/clustering.hpp"
#include "regid/errors.hpp"
#include "regid/synth.hpp"
#include "regid/var.hpp"

namespace regid {

/// Confusion counts and derived ratios over the N(N-1) ordered variable
/// pairs. Counts are doubles so that averaging across regimes keeps the
/// tp+fp+tn+fn = N(N-1) identity. Ratios with a zero denominator report 0
/// and set the degenerate flag.
struct GraphScores {
  double tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0, recall = 0, accuracy = 0, f_score = 0;
  bool degenerate = false;
};

/// Scores a discovered graph against a ground-truth adjacency (entry (i,j)
/// nonzero iff i -> j). Node names must match.
inline GraphScores score_graph(const CausalGraph& found,
                               const Eigen::MatrixXi& truth,
                               const std::vector<std::string>& truth_names) {
  const int n = static_cast<int>(found.names.size());
  if (truth.rows() != n || truth.cols() != n)
    throw UsageError("score_graph: adjacency is " + std::to_string(truth.rows()) +
                     "x" + std::to_string(truth.cols()) + " for " +
                     std::to_string(n) + " nodes");
  if (truth_names != found.names)
    throw UsageError("score_graph: node names do not match the ground truth");

  GraphScores s;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool predicted = found.has_edge(i, j);
      bool actual = truth(i, j) != 0;
      if (predicted && actual) ++s.tp;
      else if (predicted && !actual) ++s.fp;
      else if (!predicted && actual) ++s.fn;
      else ++s.tn;
    }

  auto ratio = [&s](double num, double den) {
    if (den <= 0.0) {
      s.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  s.accuracy = ratio(s.tp + s.tn, s.tp + s.fp + s.tn + s.fn);
  s.f_score = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

/// Unweighted mean of per-regime scores; f_score is averaged directly.
inline GraphScores mean_regime_scores(std::span<const GraphScores> per_regime) {
  if (per_regime.empty())
    throw UsageError("mean_regime_scores: empty score list");
  GraphScores mean;
  for (const auto& s : per_regime) {
    mean.tp += s.tp;
    mean.fp += s.fp;
    mean.tn += s.tn;
    mean.fn += s.fn;
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.accuracy += s.accuracy;
    mean.f_score += s.f_score;
    mean.degenerate = mean.degenerate || s.degenerate;
  }
  const double k = static_cast<double>(per_regime.size());
  mean.tp /= k;
  mean.fp /= k;
  mean.tn /= k;
  mean.fn /= k;
  mean.precision /= k;
  mean.recall /= k;
  mean.accuracy /= k;
  mean.f_score /= k;
  return mean;
}

inline GraphScores mean_regime_scores(const std::vector<GraphScores>& per_regime) {
  return mean_regime_scores(std::span<const GraphScores>(per_regime));
}

/// Change-point and label agreement between a found segmentation and the
/// ground truth. label_agreement is Cohen's kappa of the per-step labels
/// after the best label matching, so it is chance-adjusted and lives in
/// [-1, 1].
struct SegmentationScores {
  double rcp_recall = 0.0;
  double rcp_precision = 0.0;
  double label_agreement = 0.0;
  long margin = 0;
};

namespace detail {

/// Cohen's kappa maximized over injective relabelings of the found labels.
/// Label counts here are small (clusters), so permutations are enumerated.
inline double best_label_kappa(const std::vector<int>& truth,
                               const std::vector<int>& found) {
  const long n = static_cast<long>(truth.size());
  if (n == 0 || found.size() != truth.size()) return 0.0;
  int k_truth = *std::max_element(truth.begin(), truth.end()) + 1;
  int k_found = *std::max_element(found.begin(), found.end()) + 1;
  int k = std::max(k_truth, k_found);

  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
  for (long t = 0; t < n; ++t) confusion(truth[t], found[t]) += 1.0;

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    // perm maps found label f to truth label perm[f].
    double agree = 0.0;
    Eigen::VectorXd found_marginal = Eigen::VectorXd::Zero(k);
    for (int f = 0; f < k; ++f) {
      agree += confusion(perm[f], f);
      found_marginal(perm[f]) = confusion.col(f).sum();
    }
    double p_o = agree / static_cast<double>(n);
    double p_e = 0.0;
    for (int c = 0; c < k; ++c)
      p_e += confusion.row(c).sum() * found_marginal(c) /
             (static_cast<double>(n) * static_cast<double>(n));
    double kappa = (p_e >= 1.0) ? 1.0 : (p_o - p_e) / (1.0 - p_e);
    best = std::max(best, kappa);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace detail

/// An RCP in truth counts as recalled when a found change point lies within
/// +/- margin; a found change point counts as precise when a true RCP does.
/// Labels are compared over the span covered by the segmentation.
inline SegmentationScores score_segmentation(const RegimeSegmentation& found,
                                             const GroundTruth& truth,
                                             long margin) {
  if (margin < 0) throw UsageError("score_segmentation: margin must be >= 0");
  SegmentationScores s;
  s.margin = margin;

  auto matched = [margin](long a, const std::vector<long>& candidates) {
    for (long c : candidates)
      if (std::abs(a - c) <= margin) return true;
    return false;
  };
  if (truth.rcps.empty()) {
    s.rcp_recall = 1.0;
  } else {
    long hit = 0;
    for (long rcp : truth.rcps)
      if (matched(rcp, found.change_points)) ++hit;
    s.rcp_recall = static_cast<double>(hit) / static_cast<double>(truth.rcps.size());
  }
  if (found.change_points.empty()) {
    s.rcp_precision = 1.0;
  } else {
    long hit = 0;
    for (long cp : found.change_points)
      if (matched(cp, truth.rcps)) ++hit;
    s.rcp_precision =
        static_cast<double>(hit) / static_cast<double>(found.change_points.size());
  }

  long covered = std::min<long>(found.covered_end(),
                                static_cast<long>(truth.regime_labels.size()));
  if (covered > 0) {
    std::vector<int> found_labels(covered, 0);
    for (const auto& seg : found.segments)
      for (long t = seg.start; t < std::min(seg.end, covered); ++t)
        found_labels[t] = seg.regime;
    std::vector<int> truth_labels(truth.regime_labels.begin(),
                                  truth.regime_labels.begin() + covered);
    s.label_agreement = detail::best_label_kappa(truth_labels, found_labels);
  }
  return s;
}

/// Aligned four-metric table, one row per method.
inline std::string format_scores_table(
    const std::vector<std::pair<std::string, GraphScores>>& rows) {
  std::size_t name_width = 7;
  for (const auto& [name, scores] : rows)
    name_width = std::max(name_width, name.size());

  std::string out = "Methods";
  out.append(name_width - 7 + 2, ' ');
  out += "Precision  Recall  Accuracy  F-score\n";
  char buf[96];
  for (const auto& [name, scores] : rows) {
    out += name;
    out.append(name_width - name.size() + 2, ' ');
    std::snprintf(buf, sizeof(buf), "%-11.2f%-8.2f%-10.2f%.2f\n",
                  scores.precision, scores.recall, scores.accuracy,
                  scores.f_score);
    out += buf;
  }
  return out;
}

}  // namespace regid

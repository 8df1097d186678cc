#pragma once

#include <optional>
#include <utility>

#include "regid/clustering.hpp"
#include "regid/covariance.hpp"
#include "regid/errors.hpp"
#include "regid/random.hpp"
#include "regid/series.hpp"
#include "regid/spd.hpp"

namespace regid {

/// Knobs of the regime-identification pipeline: window covariances, optional
/// dimension reduction, k-means under a metric (k fixed or elbow-selected),
/// then label-to-segment conversion.
struct RegidOptions {
  int window = 60;
  MetricKind metric = MetricKind::AffineInvariant;
  std::optional<int> k;           // empty -> Calinski-Harabasz elbow over k_range
  std::pair<int, int> k_range{2, 8};
  std::optional<int> reduce_to;   // empty -> keep full dimension
  double shrinkage = kDefaultShrinkage;
  int min_run = 1;                // 1 = smoothing off
  int max_iter = 100;
  int n_init = 5;
  std::uint64_t seed = 0;
};

struct RegidResult {
  WindowedCovariances windows;
  ClusteringResult clustering;
  RegimeSegmentation segmentation;
  std::vector<ChPoint> ch_curve;  // empty when k was fixed by the caller
  int k = 0;
};

/// Runs the full regime-identification pipeline on a series.
inline RegidResult run_regid(const MultivariateSeries& z,
                             const RegidOptions& options) {
  RegidResult result;
  result.windows = windowed_covariances(z, options.window, options.shrinkage);
  if (options.reduce_to)
    result.windows = reduce_dim(result.windows, *options.reduce_to);

  int k;
  if (options.k) {
    k = *options.k;
  } else {
    int k_max = std::min<int>(options.k_range.second,
                              static_cast<int>(result.windows.count()) - 1);
    auto scan = optimal_k_scan(result.windows, options.metric,
                               options.k_range.first, k_max,
                               derive_seed(options.seed, "optimal-k-scan"),
                               options.max_iter, options.n_init);
    result.ch_curve = scan.curve;
    k = scan.k;
  }
  result.k = k;
  result.clustering =
      kmeans_spd_best(result.windows, k, options.metric,
                      derive_seed(options.seed, "final-clustering"),
                      options.max_iter, options.n_init);
  result.segmentation =
      to_segmentation(result.clustering, result.windows, options.min_run);
  return result;
}

}  // namespace regid

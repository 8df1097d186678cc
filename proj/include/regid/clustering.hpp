#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "regid/covariance.hpp"
#include "regid/errors.hpp"
#include "regid/parallel.hpp"
#include "regid/random.hpp"
#include "regid/spd.hpp"

namespace regid {

/// Outcome of one k-means run over a covariance pool.
///
/// `degenerate` is set when some cluster ended up empty even after reseeding
/// (e.g. every window is identical). `inertia_trace` records the objective
/// after each Lloyd iteration; it is checked to be non-increasing.
struct ClusteringResult {
  int k = 0;
  MetricKind metric = MetricKind::AffineInvariant;
  std::vector<int> labels;
  std::vector<SpdMatrix> centroids;
  double inertia = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;
  std::vector<double> inertia_trace;
};

namespace detail {

inline int nearest_centroid(const SpdMatrix& m,
                            const std::vector<SpdMatrix>& centroids,
                            MetricKind metric, double* sq_dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = distance(m, centroids[c], metric);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (sq_dist) *sq_dist = best_d * best_d;
  return best;
}

/// k-means++ seeding: first centroid uniform, each next one drawn with
/// probability proportional to the squared distance to the nearest centroid
/// chosen so far.
inline std::vector<SpdMatrix> kmeanspp_init(const std::vector<SpdMatrix>& pool,
                                            int k, MetricKind metric,
                                            std::mt19937_64& rng) {
  const std::size_t m = pool.size();
  std::vector<SpdMatrix> centroids;
  centroids.reserve(k);
  centroids.push_back(pool[uniform_index(rng, m)]);

  std::vector<double> sq(m, 0.0);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = distance(pool[i], centroids.back(), metric);
      double dd = d * d;
      if (centroids.size() == 1 || dd < sq[i]) sq[i] = dd;
      total += sq[i];
    }
    std::size_t pick;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      double acc = 0.0;
      pick = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += sq[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, m);  // all points coincide
    }
    centroids.push_back(pool[pick]);
  }
  return centroids;
}

}  // namespace detail

/// Lloyd k-means over the covariance pool under the chosen metric.
///
/// Assignment takes each matrix to its nearest centroid; the update step
/// recomputes every centroid as the Fréchet mean of its members. Empty
/// clusters are reseeded from the point farthest from its assigned centroid.
/// Iteration stops when assignments are stable or max_iter is hit.
inline ClusteringResult kmeans_spd(const WindowedCovariances& wc, int k,
                                   MetricKind metric, std::uint64_t seed,
                                   int max_iter = 100) {
  const std::size_t m = wc.count();
  if (k < 2 || static_cast<std::size_t>(k) > m)
    throw UsageError("kmeans_spd: k=" + std::to_string(k) +
                     " outside [2, " + std::to_string(m) + "]");
  if (max_iter < 1) throw UsageError("kmeans_spd: max_iter must be >= 1");

  std::mt19937_64 rng(seed);
  ClusteringResult res;
  res.k = k;
  res.metric = metric;
  res.seed = seed;
  res.centroids = detail::kmeanspp_init(wc.mats, k, metric, rng);
  res.labels.assign(m, -1);

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step.
    std::vector<int> labels(m);
    std::vector<double> sq(m);
    for (std::size_t i = 0; i < m; ++i)
      labels[i] = detail::nearest_centroid(wc.mats[i], res.centroids, metric, &sq[i]);

    // Reseed empty clusters from the worst-explained point. A pool whose
    // points all coincide (up to roundoff) keeps its empty clusters and is
    // flagged degenerate instead.
    std::vector<long> sizes(k, 0);
    for (int l : labels) ++sizes[l];
    double total_sq = 0.0;
    for (double s : sq) total_sq += s;
    const double reseed_floor = 1e-20 * (1.0 + total_sq);
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t farthest = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (sizes[labels[i]] <= 1) continue;  // do not empty another cluster
        if (sq[i] > worst) {
          worst = sq[i];
          farthest = i;
        }
      }
      if (worst > reseed_floor) {
        --sizes[labels[farthest]];
        labels[farthest] = c;
        ++sizes[c];
        res.centroids[c] = wc.mats[farthest];
        sq[farthest] = 0.0;
      }
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = distance(wc.mats[i], res.centroids[labels[i]], metric);
      inertia += d * d;
    }

    bool stable = (labels == res.labels);
    res.labels = labels;
    res.inertia = inertia;
    res.iterations = iter + 1;
    res.inertia_trace.push_back(inertia);
    if (res.inertia_trace.size() >= 2) {
      double prev = res.inertia_trace[res.inertia_trace.size() - 2];
      if (inertia > prev + 1e-9 * (1.0 + prev))
        throw DomainError("kmeans_spd: inertia increased between iterations (" +
                          std::to_string(prev) + " -> " + std::to_string(inertia) +
                          ")");
    }
    if (stable) break;

    // Update step.
    std::vector<std::vector<SpdMatrix>> members(k);
    for (std::size_t i = 0; i < m; ++i) members[labels[i]].push_back(wc.mats[i]);
    for (int c = 0; c < k; ++c)
      if (!members[c].empty())
        res.centroids[c] = frechet_mean(members[c], metric);
  }

  std::vector<bool> used(k, false);
  for (int l : res.labels) used[l] = true;
  res.degenerate = std::find(used.begin(), used.end(), false) != used.end();
  return res;
}

/// Best of n_init seed-derived k-means restarts, by inertia.
inline ClusteringResult kmeans_spd_best(const WindowedCovariances& wc, int k,
                                        MetricKind metric, std::uint64_t seed,
                                        int max_iter = 100, int n_init = 5) {
  if (n_init < 1) throw UsageError("kmeans_spd_best: n_init must be >= 1");
  ClusteringResult best;
  bool have = false;
  for (int r = 0; r < n_init; ++r) {
    ClusteringResult run =
        kmeans_spd(wc, k, metric, derive_seed(seed, "kmeans-restart", r), max_iter);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  best.seed = seed;
  return best;
}

/// Calinski-Harabasz score of a clustering; degenerate (zero within-cluster
/// dispersion) runs report +infinity.
struct ChScore {
  double value = 0.0;
  bool degenerate = false;
};

/// CH = [B/(k-1)] / [W/(m-k)] where W sums squared metric distances of
/// members to their centroid and B sums m_i d^2(mu_i, mu_global) against the
/// Fréchet mean of the whole pool under the same metric.
inline ChScore calinski_harabasz(const WindowedCovariances& wc,
                                 const ClusteringResult& result) {
  const std::size_t m = wc.count();
  if (result.k < 2)
    throw UsageError("calinski_harabasz: need k >= 2");
  if (static_cast<std::size_t>(result.k) >= m)
    throw UsageError("calinski_harabasz: need more windows than clusters (m=" +
                     std::to_string(m) + ", k=" + std::to_string(result.k) + ")");
  if (result.labels.size() != m)
    throw UsageError("calinski_harabasz: result does not match the pool");

  SpdMatrix global = frechet_mean(wc.mats, result.metric);
  double within = 0.0;
  std::vector<long> sizes(result.k, 0);
  for (std::size_t i = 0; i < m; ++i) {
    double d = distance(wc.mats[i], result.centroids[result.labels[i]],
                        result.metric);
    within += d * d;
    ++sizes[result.labels[i]];
  }
  double between = 0.0;
  for (int c = 0; c < result.k; ++c) {
    if (sizes[c] == 0) continue;
    double d = distance(result.centroids[c], global, result.metric);
    between += static_cast<double>(sizes[c]) * d * d;
  }

  // Zero within-dispersion up to roundoff: perfect separation sentinel.
  if (within <= 1e-20 * (1.0 + between))
    return {std::numeric_limits<double>::infinity(), true};
  double score = (between / (result.k - 1)) /
                 (within / static_cast<double>(m - result.k));
  return {score, false};
}

struct ChPoint {
  int k = 0;
  double score = 0.0;
};

struct OptimalKResult {
  int k = 0;
  std::vector<ChPoint> curve;
};

/// Elbow of a score curve: the index where the slope drops the most,
/// i.e. argmax of [f(k)-f(k-1)] - [f(k+1)-f(k)] with the curve extended
/// flat at both ends. Ties break toward the smaller index.
inline std::size_t elbow_index(const std::vector<double>& curve) {
  if (curve.empty()) throw UsageError("elbow_index: empty curve");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double prev = (i == 0) ? curve[i] : curve[i - 1];
    double next = (i + 1 == curve.size()) ? curve[i] : curve[i + 1];
    double score = 2.0 * curve[i] - prev - next;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

/// Scans k over [k_min, k_max], scoring each k's best-of-n_init clustering
/// with the Calinski-Harabasz index, and picks the elbow of the curve.
/// A k whose clustering already has zero within-cluster dispersion wins
/// outright (smallest such k).
inline OptimalKResult optimal_k_scan(const WindowedCovariances& wc,
                                     MetricKind metric, int k_min, int k_max,
                                     std::uint64_t seed, int max_iter = 100,
                                     int n_init = 5) {
  const std::size_t m = wc.count();
  if (k_min < 2 || static_cast<std::size_t>(k_max) > m - 1 || k_max < k_min)
    throw UsageError("optimal_k: range [" + std::to_string(k_min) + "," +
                     std::to_string(k_max) + "] outside [2, " +
                     std::to_string(m > 0 ? m - 1 : 0) + "]");
  if (k_max - k_min + 1 < 3)
    throw UsageError("optimal_k: need at least 3 candidate values of k");

  const int n_k = k_max - k_min + 1;
  std::vector<ChScore> scores(n_k);
  parallel_for(n_k, worker_count(), [&](std::size_t idx) {
    int k = k_min + static_cast<int>(idx);
    ClusteringResult run = kmeans_spd_best(
        wc, k, metric, derive_seed(seed, "optimal-k", k), max_iter, n_init);
    scores[idx] = calinski_harabasz(wc, run);
  });

  OptimalKResult out;
  out.curve.reserve(n_k);
  for (int i = 0; i < n_k; ++i)
    out.curve.push_back({k_min + i, scores[i].value});

  for (int i = 0; i < n_k; ++i) {
    if (scores[i].degenerate) {
      out.k = k_min + i;
      return out;
    }
  }
  std::vector<double> values(n_k);
  for (int i = 0; i < n_k; ++i) values[i] = scores[i].value;
  out.k = k_min + static_cast<int>(elbow_index(values));
  return out;
}

inline int optimal_k(const WindowedCovariances& wc, MetricKind metric, int k_min,
                     int k_max, std::uint64_t seed) {
  return optimal_k_scan(wc, metric, k_min, k_max, seed).k;
}

/// One contiguous span of windows sharing a regime; [start, end) in time steps.
struct Segment {
  long start = 0;
  long end = 0;
  int regime = 0;

  bool operator==(const Segment&) const = default;
};

/// Window labels mapped onto the time axis: contiguous segments plus the
/// regime change points between them.
struct RegimeSegmentation {
  int window = 0;
  std::vector<Segment> segments;
  std::vector<long> change_points;

  long covered_end() const { return segments.empty() ? 0 : segments.back().end; }
};

/// Converts window labels into time segments. Maximal label runs shorter than
/// min_run windows are absorbed into the neighboring run whose centroid is
/// nearer (ties to the preceding run), then adjacent equal labels merge.
/// Change points are the interior segment boundaries.
inline RegimeSegmentation to_segmentation(const ClusteringResult& result,
                                          const WindowedCovariances& wc,
                                          int min_run = 1) {
  if (min_run < 1) throw UsageError("to_segmentation: min_run must be >= 1");
  if (result.labels.size() != wc.count())
    throw UsageError("to_segmentation: labels do not match the pool");

  struct Run {
    int label;
    std::size_t begin;  // window index
    std::size_t end;
  };
  auto build_runs = [](const std::vector<int>& labels) {
    std::vector<Run> runs;
    for (std::size_t i = 0; i < labels.size();) {
      std::size_t j = i;
      while (j < labels.size() && labels[j] == labels[i]) ++j;
      runs.push_back({labels[i], i, j});
      i = j;
    }
    return runs;
  };

  std::vector<int> labels = result.labels;
  for (;;) {
    auto runs = build_runs(labels);
    if (runs.size() <= 1) break;
    bool changed = false;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (runs[r].end - runs[r].begin >= static_cast<std::size_t>(min_run))
        continue;
      int left = (r > 0) ? runs[r - 1].label : -1;
      int right = (r + 1 < runs.size()) ? runs[r + 1].label : -1;
      int absorb;
      if (left < 0) {
        absorb = right;
      } else if (right < 0) {
        absorb = left;
      } else {
        double d_left = 0.0, d_right = 0.0;
        for (std::size_t i = runs[r].begin; i < runs[r].end; ++i) {
          double dl = distance(wc.mats[i], result.centroids[left], result.metric);
          double dr = distance(wc.mats[i], result.centroids[right], result.metric);
          d_left += dl * dl;
          d_right += dr * dr;
        }
        absorb = (d_right < d_left) ? right : left;  // tie -> preceding
      }
      for (std::size_t i = runs[r].begin; i < runs[r].end; ++i) labels[i] = absorb;
      changed = true;
      break;  // rebuild runs after each absorption
    }
    if (!changed) break;
  }

  RegimeSegmentation seg;
  seg.window = wc.window;
  const long w = wc.window;
  for (const auto& run : build_runs(labels)) {
    long start = static_cast<long>(run.begin) * w;
    long end = static_cast<long>(run.end) * w;
    seg.segments.push_back({start, end, run.label});
  }
  for (std::size_t s = 1; s < seg.segments.size(); ++s)
    seg.change_points.push_back(seg.segments[s].start);
  return seg;
}

}  // namespace regid

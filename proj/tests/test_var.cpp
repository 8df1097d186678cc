#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "regid/var.hpp"
#include "support.hpp"

using namespace regid;
using Catch::Matchers::WithinAbs;

namespace {

/// Minimal in-test VAR simulator (kept independent of the library generator).
MultivariateSeries simulate_var(const std::vector<Eigen::MatrixXd>& lags,
                                long length, std::uint64_t seed,
                                double noise_std = 1.0) {
  const int n = static_cast<int>(lags.front().rows());
  const int p = static_cast<int>(lags.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_std);

  Eigen::MatrixXd data(length + 50, n);
  data.setZero();
  for (long t = p; t < data.rows(); ++t) {
    for (int i = 0; i < n; ++i) {
      double v = normal(rng);
      for (int l = 0; l < p; ++l) v += lags[l].row(i).dot(data.row(t - l - 1));
      data(t, i) = v;
    }
  }
  MultivariateSeries z;
  for (int j = 0; j < n; ++j) z.names.push_back("v" + std::to_string(j));
  z.data = data.bottomRows(length);
  return z;
}

MultivariateSeries white_noise(int n, long length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MultivariateSeries z;
  for (int j = 0; j < n; ++j) z.names.push_back("v" + std::to_string(j));
  z.data = regid::test::random_gaussian(static_cast<int>(length), n, rng);
  return z;
}

}  // namespace

TEST_CASE("fit_var recovers a known VAR(1)", "[var][oracle]") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3) * 0.5;
  auto z = simulate_var({a}, 2000, 1001);
  auto model = fit_var(z, 1);
  CHECK(model.order == 1);
  CHECK(model.n_obs == 1999);
  CHECK((model.coefficients[0] - a).cwiseAbs().maxCoeff() < 0.05);
  CHECK(model.intercept.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("fit_var rejects infeasible sample sizes", "[var]") {
  auto z = white_noise(3, 12, 5);
  // T - p <= N p + 1 must throw: p = 3 gives 9 usable rows vs 10 parameters.
  CHECK_THROWS_AS(fit_var(z, 3), UsageError);
  CHECK_THROWS_AS(fit_var(z, 0), UsageError);
}

TEST_CASE("fit_var rejects rank-deficient regressors", "[var]") {
  MultivariateSeries z;
  z.names = {"a", "b"};
  z.data.resize(40, 2);
  for (long t = 0; t < 40; ++t) {
    z.data(t, 0) = static_cast<double>(t % 7);
    z.data(t, 1) = 2.0 * z.data(t, 0);  // exact collinearity
  }
  CHECK_THROWS_AS(fit_var(z, 1), EstimationError);
}

TEST_CASE("white-noise coefficients sit inside their standard errors",
          "[var][oracle]") {
  int inside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto z = white_noise(3, 800, 900 + seed);
    auto model = fit_var(z, 2);
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          ++total;
          if (std::abs(model.coefficients[l](i, j)) <=
              3.0 * model.coef_se[l](i, j))
            ++inside;
        }
  }
  CHECK(static_cast<double>(inside) / total >= 0.95);
}

TEST_CASE("select_order finds the simulated order", "[var][oracle]") {
  Eigen::MatrixXd a1(3, 3), a2(3, 3);
  a1 << 0.4, 0.2, 0.0, 0.0, 0.3, 0.2, 0.1, 0.0, 0.3;
  a2 << 0.25, 0.0, 0.1, 0.1, 0.25, 0.0, 0.0, 0.1, 0.25;
  auto z = simulate_var({a1, a2}, 3000, 2002);
  CHECK(select_order(z, 6, OrderCriterion::Bic) == 2);
  CHECK(select_order(z, 1, OrderCriterion::Bic) == 1);
}

TEST_CASE("fit_var residual covariance is SPD after shrinkage", "[var]") {
  auto z = white_noise(3, 200, 314);
  auto model = fit_var(z, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.residual_cov.entries());
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(model.rss.size() == 3);
  CHECK((model.rss.array() > 0.0).all());
}

TEST_CASE("AIC also lands on the simulated order", "[var][oracle]") {
  Eigen::MatrixXd a1(2, 2), a2(2, 2);
  a1 << 0.4, 0.2, 0.0, 0.35;
  a2 << 0.3, 0.0, 0.2, 0.3;
  auto z = simulate_var({a1, a2}, 4000, 2024);
  CHECK(select_order(z, 5, OrderCriterion::Aic) == 2);
}

TEST_CASE("Bonferroni correction only removes edges", "[var]") {
  Eigen::MatrixXd a(3, 3);
  a << 0.3, 0.2, 0.0, 0.5, 0.3, 0.0, 0.0, 0.4, 0.3;
  auto z = simulate_var({a}, 500, 77);
  GraphOptions plain;
  plain.order = 1;
  plain.alpha = 0.05;
  GraphOptions corrected = plain;
  corrected.bonferroni = true;
  auto loose = discover_graph(z, plain);
  auto strict = discover_graph(z, corrected);
  CHECK(strict.edges.size() <= loose.edges.size());
  for (const auto& e : strict.edges) CHECK(loose.has_edge(e.source, e.target));
}

TEST_CASE("select_order on white noise prefers order 1 by majority",
          "[var][oracle]") {
  int ones = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto z = white_noise(3, 600, 3000 + seed);
    if (select_order(z, 5, OrderCriterion::Bic) == 1) ++ones;
  }
  CHECK(ones > 10);
}

TEST_CASE("granger_test flags strong couplings and validates inputs",
          "[var][oracle]") {
  Eigen::MatrixXd a(2, 2);
  a << 0.3, 0.0, 0.8, 0.3;  // x -> y with coefficient 0.8 at lag 1
  auto z = simulate_var({a}, 1000, 4004);
  CHECK(granger_test(z, 0, 1, 1) < 1e-6);
  CHECK(granger_test(z, 1, 0, 1) > 1e-4);

  CHECK_THROWS_AS(granger_test(z, 1, 1, 1), UsageError);
  CHECK_THROWS_AS(granger_test(z, 0, 5, 1), UsageError);
}

TEST_CASE("granger F-test is calibrated on independent noise",
          "[var][oracle][slow]") {
  // Per-pair rejection rate at alpha = 0.05 should be 5% +/- 2%.
  long rejections = 0, tests = 0;
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    auto z = white_noise(3, 1000, 7000 + seed);
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) {
        if (s == t) continue;
        ++tests;
        if (granger_test(z, s, t, 1) < 0.05) ++rejections;
      }
  }
  double rate = static_cast<double>(rejections) / static_cast<double>(tests);
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("discover_graph recovers a causal chain", "[var][oracle]") {
  Eigen::MatrixXd a(3, 3);
  a << 0.3, 0.0, 0.0,
       0.7, 0.3, 0.0,
       0.0, 0.7, 0.3;  // x -> y -> z
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto z = simulate_var({a}, 1200, 5000 + seed);
    GraphOptions options;
    options.alpha = 0.01;
    options.order = 1;
    auto graph = discover_graph(z, options);
    bool ok = graph.edges.size() == 2 && graph.has_edge(0, 1) &&
              graph.has_edge(1, 2);
    if (ok) ++exact;
  }
  CHECK(exact >= 45);
}

TEST_CASE("discover_graph false-edge rate matches alpha", "[var][oracle][slow]") {
  long false_edges = 0, pairs = 0;
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    auto z = white_noise(3, 400, 11000 + seed);
    GraphOptions options;
    options.alpha = 0.05;
    options.order = 1;
    auto graph = discover_graph(z, options);
    false_edges += static_cast<long>(graph.edges.size());
    pairs += 6;
  }
  double rate = static_cast<double>(false_edges) / static_cast<double>(pairs);
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("discover_graph rejects degenerate inputs", "[var]") {
  MultivariateSeries z;
  z.names = {"only"};
  z.data = Eigen::MatrixXd::Zero(50, 1);
  CHECK_THROWS_AS(discover_graph(z), UsageError);

  auto ok = white_noise(3, 200, 1);
  GraphOptions bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(discover_graph(ok, bad), UsageError);
}

TEST_CASE("rescaling a variable leaves the edge set unchanged",
          "[var][properties]") {
  Eigen::MatrixXd a(3, 3);
  a << 0.3, 0.0, 0.0, 0.6, 0.3, 0.0, 0.0, 0.4, 0.3;
  auto z = simulate_var({a}, 800, 6006);
  GraphOptions options;
  options.order = 2;
  auto before = discover_graph(z, options);

  MultivariateSeries scaled = z;
  scaled.data.col(1) *= 1234.5;
  auto after = discover_graph(scaled, options);

  REQUIRE(before.edges.size() == after.edges.size());
  for (std::size_t i = 0; i < before.edges.size(); ++i) {
    CHECK(before.edges[i].source == after.edges[i].source);
    CHECK(before.edges[i].target == after.edges[i].target);
    CHECK_THAT(after.edges[i].p_value, WithinAbs(before.edges[i].p_value, 1e-8));
  }
}

TEST_CASE("restricted models never beat unrestricted ones", "[var][properties]") {
  // RSS_r >= RSS_u is algebraic; probe it through the reported F p-values,
  // which would exceed one if the inequality broke.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto z = white_noise(4, 300, 8800 + seed);
    for (int s = 0; s < 4; ++s)
      for (int t = 0; t < 4; ++t) {
        if (s == t) continue;
        double pv = granger_test(z, s, t, 2);
        CHECK(pv >= 0.0);
        CHECK(pv <= 1.0);
      }
  }
}

TEST_CASE("regime_wise_graphs reduces to discover_graph on one segment",
          "[var]") {
  Eigen::MatrixXd a(3, 3);
  a << 0.3, 0.0, 0.0, 0.7, 0.3, 0.0, 0.0, 0.7, 0.3;
  auto z = simulate_var({a}, 600, 9009);

  RegimeSegmentation seg;
  seg.window = 50;
  seg.segments = {{0, z.length(), 0}};

  GraphOptions options;
  options.order = 1;
  auto whole = discover_graph(z, options);
  auto per_regime = regime_wise_graphs(z, seg, options);
  REQUIRE(per_regime.graphs.size() == 1);
  const auto& regime_graph = per_regime.graphs[0].second;
  REQUIRE(regime_graph.edges.size() == whole.edges.size());
  for (std::size_t i = 0; i < whole.edges.size(); ++i) {
    CHECK(regime_graph.edges[i].source == whole.edges[i].source);
    CHECK(regime_graph.edges[i].target == whole.edges[i].target);
    CHECK(regime_graph.edges[i].p_value == whole.edges[i].p_value);
  }
}

TEST_CASE("regimes too short to fit are skipped with a warning", "[var]") {
  auto z = white_noise(3, 300, 2);
  RegimeSegmentation seg;
  seg.window = 10;
  seg.segments = {{0, 292, 0}, {292, 300, 1}};  // 8 rows cannot fit N=3, p=2

  GraphOptions options;
  options.order = 2;
  auto result = regime_wise_graphs(z, seg, options);
  CHECK(result.graphs.size() == 1);
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("regime 1") != std::string::npos);

  RegimeSegmentation all_short;
  all_short.window = 10;
  all_short.segments = {{0, 8, 0}, {8, 16, 1}};
  MultivariateSeries tiny = z;
  tiny.data = z.data.topRows(16);
  CHECK_THROWS_AS(regime_wise_graphs(tiny, all_short, options), UsageError);
}

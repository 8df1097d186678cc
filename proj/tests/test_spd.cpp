#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "regid/spd.hpp"
#include "support.hpp"

using namespace regid;
using Catch::Matchers::WithinAbs;
using test::random_invertible;
using test::random_spd;
using test::random_symmetric;

namespace {

Eigen::MatrixXd rotation2(double angle) {
  Eigen::MatrixXd r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

double objective(const std::vector<SpdMatrix>& ms, const SpdMatrix& mu,
                 MetricKind metric) {
  double acc = 0.0;
  for (const auto& m : ms) {
    double d = distance(m, mu, metric);
    acc += d * d;
  }
  return acc;
}

}  // namespace

TEST_CASE("SpdMatrix construction validates the input", "[spd]") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(SpdMatrix(asym), DomainError);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(SpdMatrix(indefinite), DomainError);
  CHECK_THROWS_AS(SpdMatrix(indefinite, SpdMatrix::Repair::Allow), DomainError);

  Eigen::MatrixXd rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(SpdMatrix(rect), ShapeError);

  // Near-singular PSD is rejected by default and accepted with repair.
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(SpdMatrix(singular), DomainError);
  SpdMatrix repaired(singular, SpdMatrix::Repair::Allow);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(repaired.entries());
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // The all-zero matrix has nothing to scale the repair by.
  CHECK_THROWS_AS(SpdMatrix(Eigen::MatrixXd::Zero(2, 2), SpdMatrix::Repair::Allow),
                  DomainError);
}

TEST_CASE("matrix_log on fixed cases", "[spd]") {
  CHECK(matrix_log(SpdMatrix::identity(3)).isZero(1e-14));

  Eigen::MatrixXd d(2, 2);
  d << std::exp(1.0), 0.0, 0.0, std::exp(2.0);
  Eigen::MatrixXd logd = matrix_log(SpdMatrix(d));
  CHECK_THAT(logd(0, 0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(logd(1, 1), WithinAbs(2.0, 1e-12));
  CHECK_THAT(logd(0, 1), WithinAbs(0.0, 1e-12));

  // Hand eigendecomposition oracle: R diag(e,1) R^T has log R diag(1,0) R^T.
  Eigen::MatrixXd r = rotation2(std::numbers::pi / 6.0);
  Eigen::MatrixXd a = r * Eigen::Vector2d(std::numbers::e, 1.0).asDiagonal() *
                      r.transpose();
  Eigen::MatrixXd expected =
      r * Eigen::Vector2d(1.0, 0.0).asDiagonal() * r.transpose();
  CHECK((matrix_log(SpdMatrix(a)) - expected).norm() < 1e-12);
}

TEST_CASE("matrix_exp on fixed cases and round trips", "[spd]") {
  CHECK(matrix_exp(Eigen::MatrixXd::Zero(2, 2))
            .entries()
            .isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-14));

  Eigen::MatrixXd d(2, 2);
  d << 1.0, 0.0, 0.0, 2.0;
  Eigen::MatrixXd expd = matrix_exp(d).entries();
  CHECK_THAT(expd(0, 0), WithinAbs(std::exp(1.0), 1e-12));
  CHECK_THAT(expd(1, 1), WithinAbs(std::exp(2.0), 1e-12));

  Eigen::MatrixXd asym(2, 2);
  asym << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(matrix_exp(asym), DomainError);

  // exp(log(a)) reconstructs a to 1e-8 relative error up to condition 1e6.
  std::mt19937_64 rng(4201);
  for (int trial = 0; trial < 20; ++trial) {
    SpdMatrix a = random_spd(4, rng, 1e6);
    SpdMatrix back = matrix_exp(matrix_log(a));
    CHECK((back.entries() - a.entries()).norm() / a.entries().norm() < 1e-8);
  }
}

TEST_CASE("matrix_inv_sqrt on fixed cases and the algebraic identity", "[spd]") {
  CHECK(matrix_inv_sqrt(SpdMatrix::identity(2))
            .entries()
            .isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-14));

  Eigen::MatrixXd d(2, 2);
  d << 4.0, 0.0, 0.0, 9.0;
  Eigen::MatrixXd inv_sqrt = matrix_inv_sqrt(SpdMatrix(d)).entries();
  CHECK_THAT(inv_sqrt(0, 0), WithinAbs(0.5, 1e-12));
  CHECK_THAT(inv_sqrt(1, 1), WithinAbs(1.0 / 3.0, 1e-12));

  std::mt19937_64 rng(4202);
  for (int trial = 0; trial < 20; ++trial) {
    SpdMatrix a = random_spd(5, rng, 1e4);
    Eigen::MatrixXd s = matrix_inv_sqrt(a).entries();
    CHECK((s * a.entries() * s - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-8);
  }
}

TEST_CASE("distance on fixed cases", "[spd]") {
  std::mt19937_64 rng(4203);
  SpdMatrix a = random_spd(3, rng);
  for (auto metric : {MetricKind::Euclidean, MetricKind::LogEuclidean,
                      MetricKind::AffineInvariant})
    CHECK_THAT(distance(a, a, metric), WithinAbs(0.0, 1e-7));

  SpdMatrix eye2 = SpdMatrix::identity(2);
  Eigen::MatrixXd e2 = Eigen::MatrixXd::Identity(2, 2) * std::exp(2.0);
  // Commuting pair: both Riemannian metrics give sqrt(2^2 + 2^2) = 2 sqrt(2).
  CHECK_THAT(distance(eye2, SpdMatrix(e2), MetricKind::AffineInvariant),
             WithinAbs(2.0 * std::numbers::sqrt2, 1e-10));
  CHECK_THAT(distance(eye2, SpdMatrix(e2), MetricKind::LogEuclidean),
             WithinAbs(2.0 * std::numbers::sqrt2, 1e-10));

  Eigen::MatrixXd d21(2, 2);
  d21 << 2.0, 0.0, 0.0, 1.0;
  CHECK_THAT(distance(eye2, SpdMatrix(d21), MetricKind::Euclidean),
             WithinAbs(1.0, 1e-12));

  CHECK_THROWS_AS(
      distance(SpdMatrix::identity(2), SpdMatrix::identity(3), MetricKind::Euclidean),
      ShapeError);
}

TEST_CASE("metric axioms over random triples", "[spd][properties]") {
  std::mt19937_64 rng(4204);
  const auto metrics = {MetricKind::Euclidean, MetricKind::LogEuclidean,
                        MetricKind::AffineInvariant};
  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + static_cast<int>(uniform01(rng) * 5.0);  // dims 2..6
    SpdMatrix a = random_spd(n, rng);
    SpdMatrix b = random_spd(n, rng);
    SpdMatrix c = random_spd(n, rng);
    for (auto metric : metrics) {
      double ab = distance(a, b, metric);
      double ba = distance(b, a, metric);
      double ac = distance(a, c, metric);
      double bc = distance(b, c, metric);
      CHECK(std::abs(ab - ba) <= 1e-10);
      CHECK(ac <= ab + bc + 1e-9);
      CHECK(ab >= 0.0);
    }
  }
}

TEST_CASE("affine-invariant congruence and inversion invariance",
          "[spd][properties]") {
  std::mt19937_64 rng(4205);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(uniform01(rng) * 3.0);
    SpdMatrix a = random_spd(n, rng);
    SpdMatrix b = random_spd(n, rng);
    double d = distance(a, b, MetricKind::AffineInvariant);

    Eigen::MatrixXd x = random_invertible(n, rng);
    SpdMatrix xa(((x.transpose() * a.entries() * x).eval() +
                  (x.transpose() * a.entries() * x).transpose().eval()) *
                 0.5);
    SpdMatrix xb(((x.transpose() * b.entries() * x).eval() +
                  (x.transpose() * b.entries() * x).transpose().eval()) *
                 0.5);
    CHECK(std::abs(distance(xa, xb, MetricKind::AffineInvariant) - d) < 1e-8);

    SpdMatrix ia(((a.entries().inverse() + a.entries().inverse().transpose()) / 2.0)
                     .eval());
    SpdMatrix ib(((b.entries().inverse() + b.entries().inverse().transpose()) / 2.0)
                     .eval());
    CHECK(std::abs(distance(ia, ib, MetricKind::AffineInvariant) - d) < 1e-8);
  }
}

TEST_CASE("frechet_mean fixed cases", "[spd]") {
  std::mt19937_64 rng(4206);
  SpdMatrix single = random_spd(3, rng);
  for (auto metric : {MetricKind::Euclidean, MetricKind::LogEuclidean,
                      MetricKind::AffineInvariant}) {
    SpdMatrix mean = frechet_mean(std::vector<SpdMatrix>{single}, metric);
    CHECK((mean.entries() - single.entries()).norm() < 1e-8);
  }

  // {I, e^2 I} has log-Euclidean mean e I.
  std::vector<SpdMatrix> pair{
      SpdMatrix::identity(2),
      SpdMatrix(Eigen::MatrixXd::Identity(2, 2) * std::exp(2.0))};
  SpdMatrix le = frechet_mean(pair, MetricKind::LogEuclidean);
  CHECK(le.entries().isApprox(Eigen::MatrixXd::Identity(2, 2) * std::numbers::e,
                              1e-10));

  CHECK_THROWS_AS(frechet_mean(std::vector<SpdMatrix>{}, MetricKind::Euclidean),
                  UsageError);
}

TEST_CASE("Karcher mean of a pair equals the geodesic midpoint",
          "[spd][oracle]") {
  std::mt19937_64 rng(4207);
  for (int trial = 0; trial < 50; ++trial) {
    SpdMatrix a = random_spd(3, rng);
    SpdMatrix b = random_spd(3, rng);

    // Closed-form oracle: A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
    Eigen::MatrixXd a_sqrt = detail::matrix_sqrt(a.entries());
    Eigen::MatrixXd a_inv_sqrt = matrix_inv_sqrt(a).entries();
    Eigen::MatrixXd inner = a_inv_sqrt * b.entries() * a_inv_sqrt;
    inner = (inner + inner.transpose()) * 0.5;
    Eigen::MatrixXd midpoint = a_sqrt * detail::matrix_sqrt(inner) * a_sqrt;

    SpdMatrix karcher =
        frechet_mean(std::vector<SpdMatrix>{a, b}, MetricKind::AffineInvariant);
    CHECK((karcher.entries() - midpoint).norm() < 1e-7);
  }
}

TEST_CASE("log-Euclidean closed form matches independent descent",
          "[spd][oracle]") {
  // Steepest descent on S -> sum ||S - log m_k||_F^2 over symmetric S, done
  // here in test code without touching frechet_mean.
  std::mt19937_64 rng(4208);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SpdMatrix> ms;
    for (int i = 0; i < 5; ++i) ms.push_back(random_spd(3, rng));

    std::vector<Eigen::MatrixXd> logs;
    for (const auto& m : ms) logs.push_back(matrix_log(m));
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
    for (int iter = 0; iter < 4000; ++iter) {
      Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(3, 3);
      for (const auto& l : logs) grad += 2.0 * (s - l);
      s -= 0.05 * grad;
      if (grad.norm() < 1e-12) break;
    }
    Eigen::MatrixXd oracle = detail::matrix_exp_sym(s);

    SpdMatrix closed = frechet_mean(ms, MetricKind::LogEuclidean);
    CHECK((closed.entries() - oracle).norm() < 1e-7);
  }
}

TEST_CASE("mean optimality under tangent perturbations", "[spd][properties]") {
  std::mt19937_64 rng(4209);
  std::vector<SpdMatrix> ms;
  for (int i = 0; i < 12; ++i) ms.push_back(random_spd(3, rng, 30.0));

  for (auto metric : {MetricKind::Euclidean, MetricKind::LogEuclidean,
                      MetricKind::AffineInvariant}) {
    SpdMatrix mu = frechet_mean(ms, metric);
    double base = objective(ms, mu, metric);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::MatrixXd dir = random_symmetric(3, rng);
      dir /= dir.norm();
      const double scale = 1e-3;
      Eigen::MatrixXd perturbed;
      switch (metric) {
        case MetricKind::Euclidean:
          perturbed = mu.entries() + scale * dir;
          break;
        case MetricKind::LogEuclidean:
          perturbed = detail::matrix_exp_sym(matrix_log(mu) + scale * dir);
          break;
        case MetricKind::AffineInvariant: {
          Eigen::MatrixXd half = detail::matrix_sqrt(mu.entries());
          perturbed = half * detail::matrix_exp_sym(scale * dir) * half;
          break;
        }
      }
      SpdMatrix candidate(((perturbed + perturbed.transpose()) * 0.5).eval());
      CHECK(objective(ms, candidate, metric) >= base - 1e-10);
    }
  }
}

TEST_CASE("Karcher non-convergence surfaces the last iterate", "[spd]") {
  std::mt19937_64 rng(4211);
  std::vector<SpdMatrix> ms{random_spd(3, rng), random_spd(3, rng),
                            random_spd(3, rng)};
  KarcherOptions options;
  options.tolerance = 0.0;  // unreachable
  options.max_iterations = 3;
  try {
    frechet_mean(ms, MetricKind::AffineInvariant, options);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    // The carried iterate is a valid SPD matrix that has moved toward the
    // mean from its log-Euclidean starting point.
    REQUIRE(e.last_iterate().rows() == 3);
    SpdMatrix approx(e.last_iterate());
    SpdMatrix exact = frechet_mean(ms, MetricKind::AffineInvariant);
    SpdMatrix init = frechet_mean(ms, MetricKind::LogEuclidean);
    double after = distance(approx, exact, MetricKind::AffineInvariant);
    double before = distance(init, exact, MetricKind::AffineInvariant);
    CHECK(after < before);
  }
}

TEST_CASE("log-Euclidean and affine-invariant agree on commuting families",
          "[spd][properties]") {
  std::mt19937_64 rng(4210);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd q = test::random_orthogonal(3, rng);
    std::vector<SpdMatrix> ms;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd lambda(3);
      for (int j = 0; j < 3; ++j) lambda(j) = 0.2 + 5.0 * uniform01(rng);
      Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();
      ms.emplace_back(((m + m.transpose()) * 0.5).eval());
    }
    CHECK(std::abs(distance(ms[0], ms[1], MetricKind::LogEuclidean) -
                   distance(ms[0], ms[1], MetricKind::AffineInvariant)) < 1e-8);
    SpdMatrix le = frechet_mean(ms, MetricKind::LogEuclidean);
    SpdMatrix ai = frechet_mean(ms, MetricKind::AffineInvariant);
    CHECK((le.entries() - ai.entries()).norm() < 1e-8);
  }
}

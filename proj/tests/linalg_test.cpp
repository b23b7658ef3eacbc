#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include <Eigen/Dense>

#include "cooplsvi/linalg.hpp"
#include "cooplsvi/rng.hpp"

using namespace cooplsvi;
using linalg::RegularizedCovariance;

namespace {

Eigen::VectorXd random_unit_ball_vector(RngStream& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.next_gaussian();
  const double norm = v.norm();
  if (norm > 0.0) v *= rng.next_uniform() / norm;
  return v;
}

// Oracle: log det via a fresh dense factorization of an explicitly assembled
// matrix, independent of the cached-factor path.
double logdet_fresh(const Eigen::MatrixXd& m) {
  return std::log(Eigen::MatrixXd(m).determinant());
}

}  // namespace

TEST_CASE("make_covariance ridge identity") {
  const auto c2 = linalg::make_covariance(2, 1.0);
  CHECK(c2.log_det() == doctest::Approx(0.0).epsilon(1e-12));

  const auto c3 = linalg::make_covariance(3, 2.0);
  CHECK(c3.log_det() == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

  const auto c5 = linalg::make_covariance(5, 0.5);
  CHECK(c5.min_eigenvalue() == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(linalg::make_covariance(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(linalg::make_covariance(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(linalg::make_covariance(2, -1.0), std::invalid_argument);
}

TEST_CASE("rank_one_update examples") {
  const auto eye = linalg::make_covariance(2, 1.0);
  const auto bumped = linalg::rank_one_update(eye, Eigen::Vector2d(1.0, 0.0));
  CHECK(bumped.log_det() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto zeroed = linalg::rank_one_update(eye, Eigen::Vector2d(0.0, 0.0));
  CHECK(zeroed.log_det() == doctest::Approx(eye.log_det()).epsilon(1e-15));

  RngStream rng(11, StreamKind::generator);
  auto cov = linalg::make_covariance(3, 1.0);
  for (int i = 0; i < 4; ++i) cov = linalg::rank_one_update(cov, random_unit_ball_vector(rng, 3));
  const Eigen::VectorXd phi = random_unit_ball_vector(rng, 3);
  const auto next = linalg::rank_one_update(cov, phi);
  const Eigen::MatrixXd direct = cov.matrix() + phi * phi.transpose();
  CHECK(next.log_det() == doctest::Approx(logdet_fresh(direct)).epsilon(1e-10));

  CHECK_THROWS_AS(linalg::rank_one_update(eye, Eigen::Vector3d(1, 0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(linalg::rank_one_update(eye, Eigen::Vector2d(2.0, 0.0)), std::invalid_argument);
}

TEST_CASE("batch_merge examples") {
  const auto base = linalg::make_covariance(2, 1.0);

  const auto same = linalg::batch_merge(base, Eigen::MatrixXd::Zero(2, 2));
  CHECK(same.matrix() == base.matrix());
  CHECK(same.log_det() == doctest::Approx(base.log_det()).epsilon(1e-12));

  const auto doubled = linalg::batch_merge(base, Eigen::MatrixXd::Identity(2, 2));
  CHECK(doubled.log_det() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // Merge of k rank-1 outer products equals k sequential updates.
  RngStream rng(23, StreamKind::generator);
  const int d = 4, k = 6;
  auto sequential = linalg::make_covariance(d, 1.0);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd phi = random_unit_ball_vector(rng, d);
    sequential = linalg::rank_one_update(sequential, phi);
    delta += phi * phi.transpose();
  }
  const auto merged = linalg::batch_merge(linalg::make_covariance(d, 1.0), delta);
  CHECK(merged.log_det() == doctest::Approx(sequential.log_det()).epsilon(1e-9));

  Eigen::MatrixXd negdef = -0.5 * Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(linalg::batch_merge(base, negdef), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(linalg::batch_merge(base, asym), std::invalid_argument);
}

TEST_CASE("ellipsoid_norm examples") {
  const double lambda = 4.0;
  const auto cov = linalg::make_covariance(3, lambda);
  Eigen::Vector3d phi(0.3, -0.2, 0.4);
  CHECK(linalg::ellipsoid_norm(cov, phi) ==
        doctest::Approx(phi.norm() / std::sqrt(lambda)).epsilon(1e-12));
  CHECK(linalg::ellipsoid_norm(cov, Eigen::Vector3d::Zero()) == 0.0);

  // Dense-solve oracle on a random 4x4 PD matrix.
  RngStream rng(5, StreamKind::generator);
  auto pd = linalg::make_covariance(4, 1.0);
  for (int i = 0; i < 8; ++i) pd = linalg::rank_one_update(pd, random_unit_ball_vector(rng, 4));
  const Eigen::VectorXd v = random_unit_ball_vector(rng, 4);
  const double direct = std::sqrt(v.dot(pd.matrix().inverse() * v));
  CHECK(linalg::ellipsoid_norm(pd, v) == doctest::Approx(direct).epsilon(1e-10));

  // Never exceeds the ridge ceiling.
  CHECK(linalg::ellipsoid_norm(pd, v) <= v.norm() / std::sqrt(1.0) + 1e-12);
}

TEST_CASE("ridge_solve examples") {
  auto cov = linalg::make_covariance(2, 2.0);
  // 2I is lambda I (lambda = 2); acc (2, 4) -> w (1, 2).
  linalg::DesignAccumulator acc(2, 1);
  acc.add(Eigen::Vector2d(1.0, 0.0), 2.0);
  acc.add(Eigen::Vector2d(0.0, 1.0), 4.0);
  const Eigen::MatrixXd w = linalg::ridge_solve(cov, acc);
  CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w(1, 0) == doctest::Approx(2.0).epsilon(1e-12));

  linalg::DesignAccumulator zero(2, 1);
  CHECK(linalg::ridge_solve(cov, zero).cwiseAbs().maxCoeff() == 0.0);

  // Random ridge regression, 6 samples, d = 3, against the explicit-inverse
  // normal equations.
  RngStream rng(7, StreamKind::generator);
  const int d = 3;
  auto reg = linalg::make_covariance(d, 1.0);
  linalg::DesignAccumulator u(d, 1);
  Eigen::MatrixXd normal = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd phi = random_unit_ball_vector(rng, d);
    const double y = rng.next_uniform();
    reg = linalg::rank_one_update(reg, phi);
    u.add(phi, y);
    normal += phi * phi.transpose();
    rhs += phi * y;
  }
  const Eigen::VectorXd got = linalg::ridge_solve(reg, u).col(0);
  const Eigen::VectorXd want = normal.inverse() * rhs;
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);

  // Residual contract.
  const double res = (reg.matrix() * got - u.values().col(0)).cwiseAbs().maxCoeff();
  CHECK(res <= 1e-8 * (1.0 + u.values().cwiseAbs().maxCoeff()));
}

TEST_CASE("log_det_ratio examples") {
  const auto eye = linalg::make_covariance(2, 1.0);
  CHECK(linalg::log_det_ratio(eye, eye) == 0.0);

  const auto bumped = linalg::rank_one_update(eye, Eigen::Vector2d(1.0, 0.0));
  CHECK(linalg::log_det_ratio(bumped, eye) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Telescoping oracle: the ratio after 10 updates equals the sum of the
  // per-update log(1 + phi^T A^{-1} phi) increments.
  RngStream rng(13, StreamKind::generator);
  auto cov = linalg::make_covariance(3, 1.0);
  const auto start = cov;
  double increments = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd phi = random_unit_ball_vector(rng, 3);
    const double sigma = linalg::ellipsoid_norm(cov, phi);
    increments += std::log1p(sigma * sigma);
    cov = linalg::rank_one_update(cov, phi);
  }
  CHECK(linalg::log_det_ratio(cov, start) == doctest::Approx(increments).epsilon(1e-9));

  const auto other_dim = linalg::make_covariance(3, 1.0);
  CHECK_THROWS_AS(linalg::log_det_ratio(eye, other_dim), std::invalid_argument);
  const auto other_ridge = linalg::make_covariance(2, 2.0);
  CHECK_THROWS_AS(linalg::log_det_ratio(eye, other_ridge), std::invalid_argument);
}

TEST_CASE("cached log_det tracks fresh factorization over random sequences") {
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rng(1000 + trial, StreamKind::generator);
    const int d = 1 + rng.next_index(8);
    const double lambda = 0.5 + rng.next_uniform();
    auto cov = linalg::make_covariance(d, lambda);
    Eigen::MatrixXd assembled = lambda * Eigen::MatrixXd::Identity(d, d);
    const int steps = 5 + rng.next_index(40);
    for (int i = 0; i < steps; ++i) {
      const Eigen::VectorXd phi = random_unit_ball_vector(rng, d);
      cov = linalg::rank_one_update(cov, phi);
      assembled += phi * phi.transpose();
    }
    CHECK(std::abs(cov.log_det() - logdet_fresh(assembled)) < 1e-9);
  }
}

TEST_CASE("ellipsoid_norm is monotone nonincreasing under updates") {
  RngStream rng(77, StreamKind::generator);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + rng.next_index(6);
    auto cov = linalg::make_covariance(d, 1.0);
    const Eigen::VectorXd probe = random_unit_ball_vector(rng, d);
    double last = linalg::ellipsoid_norm(cov, probe);
    for (int i = 0; i < 20; ++i) {
      cov = linalg::rank_one_update(cov, random_unit_ball_vector(rng, d));
      const double now = linalg::ellipsoid_norm(cov, probe);
      CHECK(now <= last + linalg::tol::kMonotonicitySlack);
      last = now;
    }
  }
}

TEST_CASE("batch merge of the union equals sequential updates") {
  RngStream rng(91, StreamKind::generator);
  const int d = 5;
  auto sequential = linalg::make_covariance(d, 1.0);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(d, d);
  linalg::DesignAccumulator acc(d, 1);
  for (int i = 0; i < 12; ++i) {
    const Eigen::VectorXd phi = random_unit_ball_vector(rng, d);
    sequential = linalg::rank_one_update(sequential, phi);
    delta += phi * phi.transpose();
    acc.add(phi, rng.next_uniform());
  }
  const auto merged = linalg::batch_merge(linalg::make_covariance(d, 1.0), delta);
  CHECK((merged.matrix() - sequential.matrix()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(merged.log_det() - sequential.log_det()) < 1e-8);
  CHECK((linalg::ridge_solve(merged, acc) - linalg::ridge_solve(sequential, acc))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
}

TEST_CASE("covariance invariants: symmetry and eigenvalue floor") {
  RngStream rng(123, StreamKind::generator);
  auto cov = linalg::make_covariance(6, 0.75);
  for (int i = 0; i < 30; ++i) cov = linalg::rank_one_update(cov, random_unit_ball_vector(rng, 6));
  CHECK((cov.matrix() - cov.matrix().transpose()).cwiseAbs().maxCoeff() <= linalg::tol::kSymmetry);
  CHECK(cov.min_eigenvalue() >= 0.75 - linalg::tol::kEigenFloor);
}

TEST_CASE("design accumulator width checks") {
  linalg::DesignAccumulator acc(3, 2);
  CHECK_THROWS_AS(acc.add(Eigen::Vector3d::Zero(), 1.0), std::invalid_argument);
  acc.add(Eigen::Vector3d(1, 0, 0), Eigen::Vector2d(1.0, 2.0));
  CHECK(acc.values()(0, 1) == 2.0);
  CHECK_THROWS_AS(linalg::DesignAccumulator(0, 1), std::invalid_argument);
}

TEST_CASE("spectral norm of a PSD matrix") {
  Eigen::MatrixXd m(2, 2);
  m << 3.0, 0.0, 0.0, 1.5;
  CHECK(linalg::spectral_norm(m) == doctest::Approx(3.0));
}

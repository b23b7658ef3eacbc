#include <cmath>

#include <doctest.h>

#include "cooplsvi/rng.hpp"

using namespace cooplsvi;

TEST_CASE("streams are deterministic and order independent") {
  RngStream a(42, StreamKind::transition, 1, 7, 2);
  RngStream b(42, StreamKind::transition, 1, 7, 2);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  // Draws from one stream do not perturb another.
  RngStream c(42, StreamKind::transition, 1, 8, 2);
  RngStream probe(42, StreamKind::transition, 1, 7, 2);
  (void)c.next_u64();
  RngStream fresh(42, StreamKind::transition, 1, 7, 2);
  CHECK(probe.next_u64() == fresh.next_u64());
}

TEST_CASE("distinct keys give distinct streams") {
  RngStream a(42, StreamKind::transition, 1, 7, 2);
  RngStream b(42, StreamKind::transition, 2, 7, 2);
  RngStream c(42, StreamKind::initial_state, 1, 7, 2);
  CHECK(a.next_u64() != b.next_u64());
  RngStream a2(42, StreamKind::transition, 1, 7, 2);
  CHECK(a2.next_u64() != c.next_u64());
}

TEST_CASE("uniform moments") {
  RngStream rng(7, StreamKind::generator);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  // 3 sigma of the mean of n uniforms.
  CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("gaussian moments") {
  RngStream rng(9, StreamKind::generator);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("dirichlet samples live on the simplex with the right mean") {
  RngStream rng(11, StreamKind::generator);
  const int dim = 4, n = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = rng.next_dirichlet(dim, 1.0);
    CHECK(std::abs(v.sum() - 1.0) < 1e-9);
    CHECK(v.minCoeff() >= 0.0);
    mean += v;
  }
  mean /= n;
  // Dirichlet(1) marginal variance is (1/d)(1 - 1/d)/(d + 1).
  const double sigma = std::sqrt((1.0 / dim) * (1.0 - 1.0 / dim) / (dim + 1) / n);
  for (int i = 0; i < dim; ++i) CHECK(std::abs(mean[i] - 1.0 / dim) < 3.0 * sigma);
}

TEST_CASE("gamma sampler matches mean for small shapes") {
  RngStream rng(13, StreamKind::generator);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.next_gamma(0.5);
  CHECK(std::abs(sum / n - 0.5) < 0.02);
}

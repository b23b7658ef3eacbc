#include <benchmark/benchmark.h>

#include "cooplsvi/linalg.hpp"
#include "cooplsvi/rng.hpp"

using namespace cooplsvi;

namespace {

Eigen::VectorXd unit_ball_vector(RngStream& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.next_gaussian();
  const double norm = v.norm();
  if (norm > 0.0) v *= rng.next_uniform() / norm;
  return v;
}

linalg::RegularizedCovariance warm_covariance(int d, int updates) {
  RngStream rng(1, StreamKind::generator, d);
  auto cov = linalg::make_covariance(d, 1.0);
  for (int i = 0; i < updates; ++i) cov = linalg::rank_one_update(cov, unit_ball_vector(rng, d));
  return cov;
}

void BM_rank_one_update(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  auto cov = warm_covariance(d, 2 * d);
  RngStream rng(2, StreamKind::generator, d);
  const Eigen::VectorXd phi = unit_ball_vector(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::rank_one_update(cov, phi));
}
BENCHMARK(BM_rank_one_update)->Arg(4)->Arg(16)->Arg(64);

void BM_ellipsoid_norm(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto cov = warm_covariance(d, 2 * d);
  RngStream rng(3, StreamKind::generator, d);
  const Eigen::VectorXd phi = unit_ball_vector(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::ellipsoid_norm(cov, phi));
}
BENCHMARK(BM_ellipsoid_norm)->Arg(4)->Arg(16)->Arg(64);

void BM_ridge_solve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto cov = warm_covariance(d, 2 * d);
  RngStream rng(4, StreamKind::generator, d);
  linalg::DesignAccumulator acc(d, 1);
  for (int i = 0; i < 3 * d; ++i) acc.add(unit_ball_vector(rng, d), rng.next_uniform());
  for (auto _ : state) benchmark::DoNotOptimize(linalg::ridge_solve(cov, acc));
}
BENCHMARK(BM_ridge_solve)->Arg(4)->Arg(16)->Arg(64);

void BM_batch_merge(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto cov = warm_covariance(d, 2 * d);
  RngStream rng(5, StreamKind::generator, d);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const Eigen::VectorXd phi = unit_ball_vector(rng, d);
    delta += phi * phi.transpose();
  }
  for (auto _ : state) benchmark::DoNotOptimize(linalg::batch_merge(cov, delta));
}
BENCHMARK(BM_batch_merge)->Arg(4)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();

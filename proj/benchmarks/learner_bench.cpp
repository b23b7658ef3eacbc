#include <benchmark/benchmark.h>

#include "cooplsvi/mmdp_learner.hpp"
#include "cooplsvi/parallel_learner.hpp"
#include "cooplsvi/rng.hpp"

using namespace cooplsvi;

namespace {

// One planning pass over a store populated by a warm-up run.
void BM_parallel_plan(benchmark::State& state) {
  const int episodes = static_cast<int>(state.range(0));
  const auto set =
      env::make_homogeneous_set(env::generate_linear_mdp(5, 3, 3, 5, 1), 3);
  auto agents = parallel::make_agents(set, 1.0);
  parallel::BetaSchedule beta{parallel::BetaMode::homogeneous, 1.0, 5, 3, 3, episodes, 0.0};
  const auto sync = parallel::SyncPolicy::threshold(5.0);
  for (int t = 1; t <= episodes; ++t) {
    bool flag = false;
    for (int i = 0; i < set.agents; ++i) {
      const auto plan = parallel::plan(agents[i], set, beta, t);
      RngStream init(1, StreamKind::initial_state, i, t);
      int x = init.next_index(set.num_states());
      for (int h = 1; h <= set.horizon(); ++h) {
        const int a = parallel::act_greedy(plan.q_values[h - 1].row(x));
        RngStream rng(1, StreamKind::transition, i, t, h);
        const auto sr = env::step(set.specs[i], x, a, h, rng);
        flag |= parallel::observe(agents[i], set, h, {i, t, h, x, a, sr.next_state, sr.reward},
                                  sync);
        x = sr.next_state;
      }
    }
    if (flag) parallel::server_sync(agents, set, set.horizon(), t);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel::plan(agents[0], set, beta, episodes + 1));
}
BENCHMARK(BM_parallel_plan)->Arg(50)->Arg(200)->Arg(800);

void BM_mmdp_plan(benchmark::State& state) {
  const int episodes = static_cast<int>(state.range(0));
  const auto spec = env::generate_mmdp({2, 2}, {2, 2}, 2, 2, 3, 22);
  auto learner = mmdp::make_joint_learner(spec, 1.0);
  parallel::BetaSchedule beta{parallel::BetaMode::homogeneous, 1.0, spec.feat_dim(), 2, 2,
                              episodes, 0.0};
  const auto sync = parallel::SyncPolicy::threshold(1.5);
  const Eigen::VectorXd upsilon = Eigen::VectorXd::Constant(2, 0.5);
  for (int t = 1; t <= episodes; ++t) {
    const auto plan = mmdp::plan_scalarized(learner, spec, upsilon, beta, t);
    RngStream init(1, StreamKind::initial_state, 0, t);
    int x = init.next_index(spec.joint_states);
    bool flag = false;
    for (int h = 1; h <= spec.horizon; ++h) {
      const int a = mmdp::act_joint_greedy(plan.q_values[h - 1].row(x));
      RngStream rng(1, StreamKind::transition, 0, t, h);
      const auto sr = env::step(spec, x, a, h, rng);
      flag |= mmdp::observe_and_check(learner, spec, h, {t, x, a, sr.next_state}, sr.rewards, sync);
      x = sr.next_state;
    }
    if (flag) mmdp::sync_rewards(learner, t);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(mmdp::plan_scalarized(learner, spec, upsilon, beta, episodes + 1));
}
BENCHMARK(BM_mmdp_plan)->Arg(50)->Arg(500);

void BM_exact_q_star(benchmark::State& state) {
  const int states = static_cast<int>(state.range(0));
  const auto spec = env::generate_linear_mdp(states, 3, 5, 6, 7);
  for (auto _ : state) benchmark::DoNotOptimize(env::exact_q_star(spec));
}
BENCHMARK(BM_exact_q_star)->Arg(5)->Arg(20)->Arg(50);

}  // namespace

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/linalg.hpp"
#include "cooplsvi/parallel_env.hpp"

namespace cooplsvi::parallel {

/// One observed transition, together with the reward seen by the observing
/// agent. Records are deduplicated by (agent, episode, h) so a re-broadcast
/// can never double-count.
struct TransitionRecord {
  int agent = 0;
  int episode = 0;
  int h = 0;
  int x = 0;
  int a = 0;
  int x_next = 0;
  double reward = 0.0;
};

/// Scalars per record on the wire: agent, episode, x, a, x_next, reward
/// (the step index rides on the per-h grouping).
inline constexpr int kRecordScalars = 6;

enum class BetaMode { homogeneous, small_deviation, contextual };

/// Closed-form confidence width beta(t). Nondecreasing in t and positive.
struct BetaSchedule {
  BetaMode mode = BetaMode::homogeneous;
  double c_beta = 1.0;
  int d_eff = 1;
  int horizon = 1;
  int agents = 1;
  int episodes = 1;
  double xi = 0.0;

  double operator()(int t) const;
};

/// Synchronization trigger. `always` flags every observation, `never` flags
/// none; otherwise the determinant condition with threshold S applies.
struct SyncPolicy {
  static SyncPolicy always();
  static SyncPolicy never();
  static SyncPolicy threshold(double s);

  bool is_always = false;
  bool is_never = false;
  double s = 1.0;
};

/// Per-agent learner state: synced covariance lambda*I + S, the active
/// covariance lambda*I + S + deltaS updated on every observation, the
/// transition store backing the regressions, and the outbox pending upload.
struct AgentLearnerState {
  int agent_id = 0;
  int horizon = 0;
  int feat_dim = 0;
  double ridge = 1.0;
  std::vector<linalg::RegularizedCovariance> synced_cov;  // per h
  std::vector<linalg::RegularizedCovariance> active_cov;  // per h
  std::vector<std::vector<TransitionRecord>> store;       // per h
  std::vector<std::vector<TransitionRecord>> outbox;      // per h
  int last_sync_episode = 0;
};

std::vector<AgentLearnerState> make_agents(const env::ParallelEnvSet& set, double lambda);

/// Q and value tables from one backward LSVI pass. For contextual planning
/// the state axis enumerates (n, x) as n * S + x and `own_offset` points at
/// the planning agent's slice; otherwise it enumerates plain states.
struct PlanResult {
  double beta = 0.0;
  int value_states = 0;
  int own_offset = 0;
  std::vector<Eigen::VectorXd> weights;   // per h
  std::vector<Eigen::MatrixXd> q_values;  // per h: value_states x A, clipped
  Eigen::MatrixXd v_values;               // (H+1) x value_states

  double own_q(int h, int x, int a) const { return q_values[h - 1](own_offset + x, a); }
};

PlanResult plan(const AgentLearnerState& agent, const env::ParallelEnvSet& set,
                const BetaSchedule& beta, int t);

/// Heterogeneous variant: regression over combined features [phi(x, a);
/// kappa(n)], Q indexed by (n, x, a).
PlanResult plan_contextual(const AgentLearnerState& agent, const env::ParallelEnvSet& set,
                           const BetaSchedule& beta, int t);

/// Argmax with ties broken toward the lowest action index.
int act_greedy(const Eigen::Ref<const Eigen::RowVectorXd>& q_row);

/// Folds the observation into deltaS and the outbox; returns whether the
/// determinant trigger fired.
bool observe(AgentLearnerState& agent, const env::ParallelEnvSet& set, int h,
             const TransitionRecord& record, const SyncPolicy& sync);

struct SyncReport {
  int episode = 0;
  int uploads = 0;    // messages
  int downloads = 0;  // messages
  long long payload_up = 0;    // scalars
  long long payload_down = 0;  // scalars
  std::vector<double> trigger_ratios;  // per h, max over agents, pre-sync
};

/// All-h, all-agent exchange: outbox union broadcast, covariances merged,
/// stores aligned, deltas cleared. Afterwards every agent holds identical
/// synced state per step.
SyncReport server_sync(std::vector<AgentLearnerState>& agents, const env::ParallelEnvSet& set,
                       int horizon, int episode);

/// Max-abs gap between the active covariance and a from-scratch rebuild of
/// lambda*I + sum phi phi^T over the store.
double covariance_rebuild_gap(const AgentLearnerState& agent, const env::ParallelEnvSet& set);

/// 2 H sqrt(d_eff M t / lambda): ceiling on every LSVI weight-vector norm.
double weight_norm_bound(int d_eff, int agents, int t, double lambda, int horizon);

/// Greedy policy of the agent's own Q slice, for exact policy evaluation.
env::PolicyTable greedy_policy(const PlanResult& plan, int num_states);

}  // namespace cooplsvi::parallel

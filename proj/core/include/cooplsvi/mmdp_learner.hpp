#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/linalg.hpp"
#include "cooplsvi/mmdp_env.hpp"
#include "cooplsvi/parallel_learner.hpp"

namespace cooplsvi::mmdp {

/// Draws the per-episode scalarization upsilon_t from p_Upsilon. Samples are
/// deterministic in (key, t) and always lie on the M-simplex.
struct ScalarizationSampler {
  enum class Mode { dirichlet, point_mass, finite_support };

  Mode mode = Mode::dirichlet;
  int agents = 1;
  double alpha = 1.0;                    // dirichlet
  Eigen::VectorXd upsilon0;              // point_mass
  std::vector<Eigen::VectorXd> atoms;    // finite_support
  std::vector<double> atom_weights;      // finite_support
  std::uint64_t key = 0;

  static ScalarizationSampler dirichlet(int agents, double alpha, std::uint64_t key);
  static ScalarizationSampler point_mass(const Eigen::VectorXd& upsilon, std::uint64_t key);
  static ScalarizationSampler finite_support(std::vector<Eigen::VectorXd> atoms,
                                             std::vector<double> weights, std::uint64_t key);

  Eigen::VectorXd sample(int t) const;
};

struct JointTransition {
  int episode = 0;
  int x = 0;
  int a = 0;
  int x_next = 0;
};

struct RewardRecord {
  int agent = 0;
  int episode = 0;
  int h = 0;
  double reward = 0.0;
};

/// Shared learner state replicated on every agent. Planning reads only the
/// rarely-switching snapshot: data up to the last synchronized episode k_t.
/// Joint transitions are fully observable, so only rewards wait in the
/// per-agent outboxes until a sync.
struct JointLearnerState {
  int agents = 0;
  int horizon = 0;
  int feat_dim = 0;
  double ridge = 1.0;
  std::vector<linalg::RegularizedCovariance> snapshot_cov;  // per h, episodes <= k_t
  std::vector<linalg::RegularizedCovariance> pending_cov;   // per h, all episodes
  std::vector<std::vector<JointTransition>> trajectory;     // per h, episode order
  std::vector<std::vector<Eigen::VectorXd>> synced_rewards;  // per h, episodes <= k_t
  std::vector<std::vector<std::vector<RewardRecord>>> outboxes;  // per agent, per h
  int last_sync_episode = 0;

  // Bonus tables depend only on the snapshot covariance; cached until the
  // next sync. Single-writer state, as is the whole learner.
  mutable std::vector<Eigen::MatrixXd> bonus_cache;
  mutable int bonus_cache_sync = -1;
};

JointLearnerState make_joint_learner(const env::MmdpSpec& spec, double lambda);

struct JointPlanResult {
  double beta = 0.0;
  std::vector<Eigen::VectorXd> weights;   // per h: d
  std::vector<Eigen::MatrixXd> q_values;  // per h: JS x JA, clipped scalarized values
  Eigen::MatrixXd v_values;               // (H+1) x JS
};

/// Backward vector-valued LSVI over the snapshot data, scalarized by
/// upsilon. The bonus is the matrix 2-norm of Phi^T Lambda^{-1} Phi; with
/// `bonus_sqrt` its square root is used instead.
JointPlanResult plan_scalarized(const JointLearnerState& state, const env::MmdpSpec& spec,
                                const Eigen::VectorXd& upsilon, const parallel::BetaSchedule& beta,
                                int t, bool bonus_sqrt = false);

/// Exhaustive argmax over joint actions; ties break to the lexicographically
/// smallest joint action (the lowest index).
int act_joint_greedy(const Eigen::Ref<const Eigen::RowVectorXd>& q_row,
                     int budget = env::kJointBudget);

/// Folds the joint observation into the pending covariance, buffers each
/// agent's own reward, and evaluates the determinant trigger. A threshold
/// S <= 1 flags every episode.
bool observe_and_check(JointLearnerState& state, const env::MmdpSpec& spec, int h,
                       const JointTransition& transition, const Eigen::VectorXd& rewards,
                       const parallel::SyncPolicy& sync);

struct RewardSyncReport {
  int episode = 0;
  int uploads = 0;
  int downloads = 0;
  long long payload_up = 0;    // scalar rewards uploaded
  long long payload_down = 0;  // scalar rewards fanned out
  std::vector<double> trigger_ratios;  // per h, pre-sync
};

/// Reward-only exchange: assembles full reward vectors for every episode
/// through t, advances the snapshot covariance, and clears the outboxes.
RewardSyncReport sync_rewards(JointLearnerState& state, int episode);

/// Max-abs deviation between the plan and an independently rebuilt replica
/// (fresh normal equations over the broadcast history).
double replica_divergence(const JointLearnerState& state, const env::MmdpSpec& spec,
                          const JointPlanResult& plan, const Eigen::VectorXd& upsilon);

/// 2 H M sqrt(d t / lambda): ceiling on the vector-regression weight norm.
double mmdp_weight_norm_bound(int feat_dim, int agents, int t, double lambda, int horizon);

env::PolicyTable greedy_joint_policy(const JointPlanResult& plan, int joint_states);

}  // namespace cooplsvi::mmdp

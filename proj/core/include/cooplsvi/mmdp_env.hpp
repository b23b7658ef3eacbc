#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/mdp.hpp"

namespace cooplsvi::env {

/// Simultaneous-move multiagent MDP over explicit joint state/action spaces.
/// Joint indices use mixed radix with agent 0 most significant, so ascending
/// joint-action index is ascending lexicographic order over action tuples.
/// Rewards are per-agent linear in agent feature blocks of dimension
/// reward_feat_dim; transitions are linear in a common block of dimension
/// trans_feat_dim.
struct MmdpSpec {
  int agents = 0;
  std::vector<int> per_agent_states;
  std::vector<int> per_agent_actions;
  int joint_states = 0;
  int joint_actions = 0;
  int horizon = 0;
  int reward_feat_dim = 0;  // d1
  int trans_feat_dim = 0;   // d2
  std::vector<Eigen::MatrixXd> reward_features;  // per agent: (JS*JA) x d1
  Eigen::MatrixXd common_features;               // (JS*JA) x d2
  std::vector<Eigen::VectorXd> reward_weights;   // per h: d1
  std::vector<Eigen::MatrixXd> measures;         // per h: d2 x JS

  int feat_dim() const { return reward_feat_dim + trans_feat_dim; }
  int za_index(int x, int a) const { return x * joint_actions + a; }

  /// Stacked feature (d1 + d2) x M: column m is [phi_m(x, a); phi_c(x, a)].
  Eigen::MatrixXd stacked_feature(int x, int a) const;

  Eigen::VectorXd reward_vector(int x, int a, int h) const;  // length M
  Eigen::VectorXd transition_row(int x, int a, int h) const;
};

/// Joint |S| * |A| cap for generated instances and exhaustive argmax.
inline constexpr int kJointBudget = 4096;

MmdpSpec generate_mmdp(const std::vector<int>& per_agent_states,
                       const std::vector<int>& per_agent_actions, int horizon, int reward_feat_dim,
                       int trans_feat_dim, std::uint64_t seed, bool fully_cooperative = false,
                       int budget = kJointBudget);

ValidationReport validate_spec(const MmdpSpec& spec);

struct MmdpStepResult {
  Eigen::VectorXd rewards;
  int next_state = 0;
};

MmdpStepResult step(const MmdpSpec& spec, int x, int a, int h, RngStream& rng);

/// Exact DP for the scalar reward upsilon^T r over the joint spaces. The
/// greedy table is the optimal joint policy for that scalarization.
DpSolution exact_scalarized_q_star(const MmdpSpec& spec, const Eigen::VectorXd& upsilon);

/// Exact vector-valued policy evaluation: per step, a JS x M table of each
/// agent's value under the joint policy. Scalarized values follow by linearity.
std::vector<Eigen::MatrixXd> evaluate_policy_vector(const MmdpSpec& spec,
                                                    const PolicyTable& policy);

}  // namespace cooplsvi::env

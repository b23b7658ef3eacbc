#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/rng.hpp"

namespace cooplsvi::env {

/// Finite, explicitly parameterized linear MDP: transitions and rewards are
/// linear in a known feature map phi(x, a). Rows of `features` are indexed by
/// x * num_actions + a. `measures[h]` is feat_dim x num_states with each row
/// a nonnegative measure over states; `reward_weights[h]` is the step-h
/// reward vector.
struct LinearMdpSpec {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int feat_dim = 0;
  Eigen::MatrixXd features;                     // (S*A) x d
  std::vector<Eigen::MatrixXd> measures;        // per h: d x S
  std::vector<Eigen::VectorXd> reward_weights;  // per h: d

  int sa_index(int x, int a) const { return x * num_actions + a; }
  Eigen::VectorXd phi(int x, int a) const { return features.row(sa_index(x, a)).transpose(); }
  double reward(int x, int a, int h) const;                 // h is 1-based
  Eigen::VectorXd transition_row(int x, int a, int h) const;  // length S
};

struct ValidationIssue {
  std::string invariant;
  int h = 0;  // 1-based step, 0 when not step-specific
  int x = -1;
  int a = -1;
  double magnitude = 0.0;
};

using ValidationReport = std::vector<ValidationIssue>;

std::string format_report(const ValidationReport& report);

/// Valid-by-construction instance: features are simplex points, measure rows
/// are anchor distributions, reward weights lie in [0, 1]^d. Deterministic in
/// the seed.
LinearMdpSpec generate_linear_mdp(int num_states, int num_actions, int horizon, int feat_dim,
                                  std::uint64_t seed);

ValidationReport validate_spec(const LinearMdpSpec& spec);

struct StepResult {
  double reward = 0.0;
  int next_state = 0;
};

/// One environment transition: exact reward, next state by inverse-CDF on the
/// stream.
StepResult step(const LinearMdpSpec& spec, int x, int a, int h, RngStream& rng);

/// policy[h-1][x] is the action taken at step h in state x.
using PolicyTable = std::vector<std::vector<int>>;

struct DpSolution {
  std::vector<Eigen::MatrixXd> q_star;  // per h: S x A
  Eigen::MatrixXd v_star;               // (H+1) x S, row H is the zero tail
  PolicyTable greedy;
};

/// Exact backward induction; unclipped true optimum.
DpSolution exact_q_star(const LinearMdpSpec& spec);

/// Exact policy evaluation; returns an (H+1) x S value table.
Eigen::MatrixXd evaluate_policy(const LinearMdpSpec& spec, const PolicyTable& policy);

}  // namespace cooplsvi::env

#include "cooplsvi/mmdp_env.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cooplsvi::env {

namespace {
constexpr double kSimplexTol = 1e-9;
constexpr double kRowSumTol = 1e-9;
constexpr double kEntryTol = 1e-12;
constexpr double kRewardTol = 1e-12;
}  // namespace

Eigen::MatrixXd MmdpSpec::stacked_feature(int x, int a) const {
  Eigen::MatrixXd phi(feat_dim(), agents);
  const int row = za_index(x, a);
  for (int m = 0; m < agents; ++m) {
    phi.col(m).head(reward_feat_dim) = reward_features[m].row(row).transpose();
    phi.col(m).tail(trans_feat_dim) = common_features.row(row).transpose();
  }
  return phi;
}

Eigen::VectorXd MmdpSpec::reward_vector(int x, int a, int h) const {
  Eigen::VectorXd r(agents);
  const int row = za_index(x, a);
  for (int m = 0; m < agents; ++m) r[m] = reward_features[m].row(row).dot(reward_weights[h - 1]);
  return r;
}

Eigen::VectorXd MmdpSpec::transition_row(int x, int a, int h) const {
  return (common_features.row(za_index(x, a)) * measures[h - 1]).transpose();
}

MmdpSpec generate_mmdp(const std::vector<int>& per_agent_states,
                       const std::vector<int>& per_agent_actions, int horizon, int reward_feat_dim,
                       int trans_feat_dim, std::uint64_t seed, bool fully_cooperative, int budget) {
  const int agents = static_cast<int>(per_agent_states.size());
  if (agents < 1 || per_agent_actions.size() != per_agent_states.size())
    throw std::invalid_argument("generate_mmdp: per-agent sizes must be nonempty and aligned");
  if (horizon < 1 || reward_feat_dim < 1 || trans_feat_dim < 1)
    throw std::invalid_argument("generate_mmdp: sizes must be >= 1");

  long joint_states = 1, joint_actions = 1;
  for (int m = 0; m < agents; ++m) {
    if (per_agent_states[m] < 1 || per_agent_actions[m] < 1)
      throw std::invalid_argument("generate_mmdp: per-agent spaces must be >= 1");
    joint_states *= per_agent_states[m];
    joint_actions *= per_agent_actions[m];
  }
  if (joint_states * joint_actions > budget)
    throw std::invalid_argument("generate_mmdp: joint space exceeds the budget");

  MmdpSpec spec;
  spec.agents = agents;
  spec.per_agent_states = per_agent_states;
  spec.per_agent_actions = per_agent_actions;
  spec.joint_states = static_cast<int>(joint_states);
  spec.joint_actions = static_cast<int>(joint_actions);
  spec.horizon = horizon;
  spec.reward_feat_dim = reward_feat_dim;
  spec.trans_feat_dim = trans_feat_dim;

  const int rows = spec.joint_states * spec.joint_actions;
  if (trans_feat_dim > rows || reward_feat_dim > rows)
    throw std::invalid_argument("generate_mmdp: feature dims exceed the joint space");

  RngStream rng(seed, StreamKind::generator, 0x33u, static_cast<std::uint64_t>(agents),
                static_cast<std::uint64_t>(reward_feat_dim) << 16 |
                    static_cast<std::uint64_t>(trans_feat_dim));

  // Shares 1/(2M) of the stacked-feature mass per block keep the Frobenius
  // norm of the d x M feature at or below 1; the matching 1/scale on theta
  // and mu restores rewards in [0, 1] and exact transition kernels.
  const double scale = 1.0 / std::sqrt(2.0 * agents);

  spec.common_features.resize(rows, trans_feat_dim);
  for (int row = 0; row < rows; ++row) {
    if (row < trans_feat_dim) {
      spec.common_features.row(row).setZero();
      spec.common_features(row, row) = 1.0;
    } else {
      spec.common_features.row(row) = rng.next_dirichlet(trans_feat_dim, 1.0).transpose();
    }
  }
  spec.common_features *= scale;

  spec.reward_features.resize(agents);
  for (int m = 0; m < agents; ++m) {
    if (fully_cooperative && m > 0) {
      spec.reward_features[m] = spec.reward_features[0];
      continue;
    }
    spec.reward_features[m].resize(rows, reward_feat_dim);
    for (int row = 0; row < rows; ++row)
      spec.reward_features[m].row(row) = rng.next_dirichlet(reward_feat_dim, 1.0).transpose();
    spec.reward_features[m] *= scale;
  }

  spec.measures.resize(horizon);
  spec.reward_weights.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    spec.measures[h].resize(trans_feat_dim, spec.joint_states);
    for (int i = 0; i < trans_feat_dim; ++i)
      spec.measures[h].row(i) = rng.next_dirichlet(spec.joint_states, 1.0).transpose() / scale;
    spec.reward_weights[h].resize(reward_feat_dim);
    for (int i = 0; i < reward_feat_dim; ++i) spec.reward_weights[h][i] = rng.next_uniform() / scale;
  }
  return spec;
}

ValidationReport validate_spec(const MmdpSpec& spec) {
  ValidationReport report;
  for (int x = 0; x < spec.joint_states; ++x) {
    for (int a = 0; a < spec.joint_actions; ++a) {
      const double norm = spec.stacked_feature(x, a).norm();
      if (norm > 1.0 + kRowSumTol) report.push_back({"stacked-feature-norm", 0, x, a, norm - 1.0});
      for (int h = 1; h <= spec.horizon; ++h) {
        const Eigen::VectorXd row = spec.transition_row(x, a, h);
        if (std::abs(row.sum() - 1.0) > kRowSumTol)
          report.push_back({"transition-row-sum", h, x, a, row.sum() - 1.0});
        if (row.minCoeff() < -kEntryTol)
          report.push_back({"transition-entry-negative", h, x, a, row.minCoeff()});
        const Eigen::VectorXd r = spec.reward_vector(x, a, h);
        if (r.minCoeff() < -kRewardTol || r.maxCoeff() > 1.0 + kRewardTol)
          report.push_back({"reward-range", h, x, a,
                            r.minCoeff() < 0.0 ? r.minCoeff() : r.maxCoeff() - 1.0});
      }
    }
  }
  return report;
}

MmdpStepResult step(const MmdpSpec& spec, int x, int a, int h, RngStream& rng) {
  if (h < 1 || h > spec.horizon) throw std::invalid_argument("step: h out of range");
  if (x < 0 || x >= spec.joint_states || a < 0 || a >= spec.joint_actions)
    throw std::invalid_argument("step: state or action out of range");
  MmdpStepResult out;
  out.rewards = spec.reward_vector(x, a, h);
  const Eigen::VectorXd row = spec.transition_row(x, a, h);
  const double u = rng.next_uniform();
  double cdf = 0.0;
  out.next_state = spec.joint_states - 1;
  for (int xp = 0; xp < spec.joint_states; ++xp) {
    cdf += std::max(row[xp], 0.0);
    if (u < cdf) {
      out.next_state = xp;
      break;
    }
  }
  return out;
}

DpSolution exact_scalarized_q_star(const MmdpSpec& spec, const Eigen::VectorXd& upsilon) {
  if (upsilon.size() != spec.agents)
    throw std::invalid_argument("exact_scalarized_q_star: upsilon length mismatch");
  if (upsilon.minCoeff() < -kSimplexTol || std::abs(upsilon.sum() - 1.0) > kSimplexTol)
    throw std::invalid_argument("exact_scalarized_q_star: upsilon is not on the simplex");

  const int S = spec.joint_states;
  const int A = spec.joint_actions;
  const int H = spec.horizon;

  DpSolution sol;
  sol.q_star.assign(H, Eigen::MatrixXd::Zero(S, A));
  sol.v_star = Eigen::MatrixXd::Zero(H + 1, S);
  sol.greedy.assign(H, std::vector<int>(S, 0));

  for (int h = H; h >= 1; --h) {
    for (int x = 0; x < S; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const double q = upsilon.dot(spec.reward_vector(x, a, h)) +
                         spec.transition_row(x, a, h).dot(sol.v_star.row(h).transpose());
        sol.q_star[h - 1](x, a) = q;
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      sol.v_star(h - 1, x) = best;
      sol.greedy[h - 1][x] = best_a;
    }
  }
  return sol;
}

std::vector<Eigen::MatrixXd> evaluate_policy_vector(const MmdpSpec& spec,
                                                    const PolicyTable& policy) {
  const int S = spec.joint_states;
  const int H = spec.horizon;
  if (static_cast<int>(policy.size()) != H)
    throw std::invalid_argument("evaluate_policy_vector: policy must cover every step");

  std::vector<Eigen::MatrixXd> values(H + 1, Eigen::MatrixXd::Zero(S, spec.agents));
  for (int h = H; h >= 1; --h) {
    for (int x = 0; x < S; ++x) {
      const int a = policy[h - 1][x];
      const Eigen::VectorXd row = spec.transition_row(x, a, h);
      values[h - 1].row(x) =
          spec.reward_vector(x, a, h).transpose() + row.transpose() * values[h];
    }
  }
  return values;
}

}  // namespace cooplsvi::env

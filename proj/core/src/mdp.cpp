#include "cooplsvi/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cooplsvi::env {

namespace {
constexpr double kRowSumTol = 1e-9;
constexpr double kEntryTol = 1e-12;
constexpr double kRewardTol = 1e-12;
constexpr double kMeasureNormTol = 1e-9;
}  // namespace

double LinearMdpSpec::reward(int x, int a, int h) const {
  return features.row(sa_index(x, a)).dot(reward_weights[h - 1]);
}

Eigen::VectorXd LinearMdpSpec::transition_row(int x, int a, int h) const {
  return (features.row(sa_index(x, a)) * measures[h - 1]).transpose();
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  for (const auto& issue : report) {
    os << issue.invariant << " at (h=" << issue.h << ", x=" << issue.x << ", a=" << issue.a
       << "), magnitude " << issue.magnitude << "\n";
  }
  return os.str();
}

LinearMdpSpec generate_linear_mdp(int num_states, int num_actions, int horizon, int feat_dim,
                                  std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1 || horizon < 1 || feat_dim < 1)
    throw std::invalid_argument("generate_linear_mdp: all sizes must be >= 1");
  if (feat_dim > num_states * num_actions)
    throw std::invalid_argument("generate_linear_mdp: feat_dim exceeds num_states * num_actions");

  LinearMdpSpec spec;
  spec.num_states = num_states;
  spec.num_actions = num_actions;
  spec.horizon = horizon;
  spec.feat_dim = feat_dim;

  RngStream rng(seed, StreamKind::generator, static_cast<std::uint64_t>(num_states),
                static_cast<std::uint64_t>(num_actions),
                static_cast<std::uint64_t>(horizon) << 16 | static_cast<std::uint64_t>(feat_dim));

  // Features: points on the d-simplex, so each transition row below is a
  // convex combination of anchor distributions. The first d rows are the
  // simplex corners, which keeps the feature matrix full rank.
  spec.features = Eigen::MatrixXd::Zero(num_states * num_actions, feat_dim);
  for (int row = 0; row < num_states * num_actions; ++row) {
    if (row < feat_dim) {
      spec.features(row, row) = 1.0;
    } else {
      spec.features.row(row) = rng.next_dirichlet(feat_dim, 1.0).transpose();
    }
  }

  spec.measures.resize(horizon);
  spec.reward_weights.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd anchors(feat_dim, num_states);
    for (int i = 0; i < feat_dim; ++i) {
      anchors.row(i) = rng.next_dirichlet(num_states, 1.0).transpose();
    }
    spec.measures[h] = anchors;
    Eigen::VectorXd theta(feat_dim);
    for (int i = 0; i < feat_dim; ++i) theta[i] = rng.next_uniform();
    spec.reward_weights[h] = theta;
  }
  return spec;
}

ValidationReport validate_spec(const LinearMdpSpec& spec) {
  ValidationReport report;
  const int S = spec.num_states;
  const int A = spec.num_actions;
  const double sqrt_d = std::sqrt(static_cast<double>(spec.feat_dim));

  for (int x = 0; x < S; ++x) {
    for (int a = 0; a < A; ++a) {
      const double norm = spec.features.row(spec.sa_index(x, a)).norm();
      if (norm > 1.0 + kRowSumTol)
        report.push_back({"feature-norm", 0, x, a, norm - 1.0});
    }
  }

  for (int h = 1; h <= spec.horizon; ++h) {
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd row = spec.transition_row(x, a, h);
        const double sum = row.sum();
        if (std::abs(sum - 1.0) > kRowSumTol)
          report.push_back({"transition-row-sum", h, x, a, sum - 1.0});
        for (int xp = 0; xp < S; ++xp) {
          if (row[xp] < -kEntryTol) {
            report.push_back({"transition-entry-negative", h, x, a, row[xp]});
            break;
          }
        }
        const double r = spec.reward(x, a, h);
        if (r < -kRewardTol || r > 1.0 + kRewardTol)
          report.push_back({"reward-range", h, x, a, r < 0.0 ? r : r - 1.0});
      }
    }
    const double measure_norm = spec.measures[h - 1].rowwise().sum().norm();
    if (measure_norm > sqrt_d + kMeasureNormTol)
      report.push_back({"measure-norm", h, -1, -1, measure_norm - sqrt_d});
  }
  return report;
}

StepResult step(const LinearMdpSpec& spec, int x, int a, int h, RngStream& rng) {
  if (h < 1 || h > spec.horizon) throw std::invalid_argument("step: h out of range");
  if (x < 0 || x >= spec.num_states || a < 0 || a >= spec.num_actions)
    throw std::invalid_argument("step: state or action out of range");

  StepResult out;
  out.reward = spec.reward(x, a, h);
  const Eigen::VectorXd row = spec.transition_row(x, a, h);
  const double u = rng.next_uniform();
  double cdf = 0.0;
  out.next_state = spec.num_states - 1;
  for (int xp = 0; xp < spec.num_states; ++xp) {
    cdf += std::max(row[xp], 0.0);
    if (u < cdf) {
      out.next_state = xp;
      break;
    }
  }
  return out;
}

DpSolution exact_q_star(const LinearMdpSpec& spec) {
  const int S = spec.num_states;
  const int A = spec.num_actions;
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
        const Eigen::VectorXd row = spec.transition_row(x, a, h);
        const double q = spec.reward(x, a, h) + row.dot(sol.v_star.row(h).transpose());
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

Eigen::MatrixXd evaluate_policy(const LinearMdpSpec& spec, const PolicyTable& policy) {
  const int S = spec.num_states;
  const int H = spec.horizon;
  if (static_cast<int>(policy.size()) != H)
    throw std::invalid_argument("evaluate_policy: policy must cover every step");

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(H + 1, S);
  for (int h = H; h >= 1; --h) {
    if (static_cast<int>(policy[h - 1].size()) != S)
      throw std::invalid_argument("evaluate_policy: policy must cover every state");
    for (int x = 0; x < S; ++x) {
      const int a = policy[h - 1][x];
      const Eigen::VectorXd row = spec.transition_row(x, a, h);
      values(h - 1, x) = spec.reward(x, a, h) + row.dot(values.row(h).transpose());
    }
  }
  return values;
}

}  // namespace cooplsvi::env

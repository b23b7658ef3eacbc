#include "cooplsvi/parallel_learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cooplsvi/errors.hpp"

namespace cooplsvi::parallel {

double BetaSchedule::operator()(int t) const {
  // c_beta sqrt(ln(t M H)), floored so the width stays positive at t = 1.
  // The d and H prefactors of the nominal theory width are folded into the
  // absolute constant; at desk scale they over-explore badly.
  const double arg = std::max(static_cast<double>(t) * agents * horizon, 2.0);
  double beta = c_beta * std::sqrt(std::log(arg));
  if (mode == BetaMode::small_deviation)
    beta += c_beta * xi * std::sqrt(static_cast<double>(d_eff) * agents * episodes);
  return beta;
}

SyncPolicy SyncPolicy::always() { return SyncPolicy{true, false, 0.0}; }
SyncPolicy SyncPolicy::never() { return SyncPolicy{false, true, 0.0}; }
SyncPolicy SyncPolicy::threshold(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("SyncPolicy: threshold must be positive");
  return SyncPolicy{false, false, s};
}

std::vector<AgentLearnerState> make_agents(const env::ParallelEnvSet& set, double lambda) {
  std::vector<AgentLearnerState> agents;
  agents.reserve(set.agents);
  const int d = set.feat_dim();
  const int H = set.horizon();
  for (int m = 0; m < set.agents; ++m) {
    AgentLearnerState a;
    a.agent_id = m;
    a.horizon = H;
    a.feat_dim = d;
    a.ridge = lambda;
    a.synced_cov.assign(H, linalg::make_covariance(d, lambda));
    a.active_cov.assign(H, linalg::make_covariance(d, lambda));
    a.store.assign(H, {});
    a.outbox.assign(H, {});
    agents.push_back(std::move(a));
  }
  return agents;
}

namespace {

double clip(double q, double cap) { return std::min(std::max(q, 0.0), cap); }

PlanResult plan_impl(const AgentLearnerState& agent, const env::ParallelEnvSet& set,
                     const BetaSchedule& beta, int t, bool contextual) {
  const int S = set.num_states();
  const int A = set.num_actions();
  const int H = agent.horizon;
  const int M = set.agents;
  const int states = contextual ? M * S : S;

  PlanResult out;
  out.beta = beta(t);
  out.value_states = states;
  out.own_offset = contextual ? agent.agent_id * S : 0;
  out.weights.resize(H);
  out.q_values.assign(H, Eigen::MatrixXd::Zero(states, A));
  out.v_values = Eigen::MatrixXd::Zero(H + 1, states);

  for (int h = H; h >= 1; --h) {
    // Targets are rebuilt from raw transitions on every pass: the step-(h+1)
    // value function just computed feeds the step-h regression.
    linalg::DesignAccumulator acc(agent.feat_dim, 1);
    for (const TransitionRecord& rec : agent.store[h - 1]) {
      const int next_row = contextual ? rec.agent * S + rec.x_next : rec.x_next;
      const double y = rec.reward + out.v_values(h, next_row);
      acc.add(set.specs[rec.agent].phi(rec.x, rec.a), y);
    }
    const Eigen::VectorXd w = linalg::ridge_solve(agent.active_cov[h - 1], acc).col(0);
    out.weights[h - 1] = w;

    const double cap = static_cast<double>(H - h + 1);
    for (int row = 0; row < states; ++row) {
      const int n = contextual ? row / S : agent.agent_id;
      const int x = contextual ? row % S : row;
      double best = 0.0;
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd phi = set.specs[n].phi(x, a);
        const double q = clip(
            phi.dot(w) + out.beta * agent.active_cov[h - 1].ellipsoid_norm(phi), cap);
        out.q_values[h - 1](row, a) = q;
        best = std::max(best, q);
      }
      out.v_values(h - 1, row) = best;
    }
  }
  return out;
}

}  // namespace

PlanResult plan(const AgentLearnerState& agent, const env::ParallelEnvSet& set,
                const BetaSchedule& beta, int t) {
  return plan_impl(agent, set, beta, t, false);
}

PlanResult plan_contextual(const AgentLearnerState& agent, const env::ParallelEnvSet& set,
                           const BetaSchedule& beta, int t) {
  if (set.flavor != env::ParallelFlavor::contextual && set.context_dim != 0)
    throw std::invalid_argument("plan_contextual: environment carries no context table");
  return plan_impl(agent, set, beta, t, true);
}

int act_greedy(const Eigen::Ref<const Eigen::RowVectorXd>& q_row) {
  int best = 0;
  for (int a = 1; a < q_row.size(); ++a)
    if (q_row[a] > q_row[best]) best = a;
  return best;
}

bool observe(AgentLearnerState& agent, const env::ParallelEnvSet& set, int h,
             const TransitionRecord& record, const SyncPolicy& sync) {
  if (record.agent != agent.agent_id)
    throw std::invalid_argument("observe: record does not belong to this agent");
  if (record.h != h || h < 1 || h > agent.horizon)
    throw std::invalid_argument("observe: step index mismatch");

  const Eigen::VectorXd phi = set.specs[record.agent].phi(record.x, record.a);
  agent.active_cov[h - 1] = linalg::rank_one_update(agent.active_cov[h - 1], phi);
  agent.store[h - 1].push_back(record);
  agent.outbox[h - 1].push_back(record);

  if (sync.is_never) return false;
  if (sync.is_always) return true;
  const double ratio = linalg::log_det_ratio(agent.active_cov[h - 1], agent.synced_cov[h - 1]);
  const int dt = std::max(record.episode - agent.last_sync_episode, 1);
  return ratio > sync.s / dt;
}

SyncReport server_sync(std::vector<AgentLearnerState>& agents, const env::ParallelEnvSet& set,
                       int horizon, int episode) {
  if (agents.empty()) throw std::invalid_argument("server_sync: no agents");
  for (const auto& a : agents)
    if (a.horizon != horizon)
      throw protocol_error("server_sync: inconsistent h-range across agents");

  SyncReport report;
  report.episode = episode;
  report.trigger_ratios.assign(horizon, 0.0);

  const int M = static_cast<int>(agents.size());
  for (int h = 1; h <= horizon; ++h) {
    for (const auto& a : agents)
      report.trigger_ratios[h - 1] =
          std::max(report.trigger_ratios[h - 1],
                   linalg::log_det_ratio(a.active_cov[h - 1], a.synced_cov[h - 1]));

    // Union of outboxes, deduplicated by (agent, episode) and canonically
    // ordered so every agent folds the same records in the same order.
    std::vector<TransitionRecord> unioned;
    std::set<std::pair<int, int>> seen;
    for (const auto& a : agents) {
      for (const TransitionRecord& rec : a.outbox[h - 1]) {
        if (seen.insert({rec.agent, rec.episode}).second) unioned.push_back(rec);
      }
    }
    std::sort(unioned.begin(), unioned.end(), [](const auto& l, const auto& r) {
      return std::tie(l.agent, l.episode) < std::tie(r.agent, r.episode);
    });

    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(agents[0].feat_dim, agents[0].feat_dim);
    for (const TransitionRecord& rec : unioned) {
      const Eigen::VectorXd phi = set.specs[rec.agent].phi(rec.x, rec.a);
      delta.noalias() += phi * phi.transpose();
    }

    for (auto& a : agents) {
      report.payload_up += static_cast<long long>(a.outbox[h - 1].size()) * kRecordScalars;
      report.payload_down +=
          static_cast<long long>(unioned.size() - a.outbox[h - 1].size()) * kRecordScalars;
    }
    report.uploads += M;
    report.downloads += M;

    for (auto& a : agents) {
      a.synced_cov[h - 1] = linalg::batch_merge(a.synced_cov[h - 1], delta);
      a.active_cov[h - 1] = a.synced_cov[h - 1];
      std::set<std::pair<int, int>> have;
      for (const TransitionRecord& rec : a.store[h - 1]) have.insert({rec.agent, rec.episode});
      for (const TransitionRecord& rec : unioned)
        if (!have.count({rec.agent, rec.episode})) a.store[h - 1].push_back(rec);
      std::sort(a.store[h - 1].begin(), a.store[h - 1].end(), [](const auto& l, const auto& r) {
        return std::tie(l.episode, l.agent) < std::tie(r.episode, r.agent);
      });
      a.outbox[h - 1].clear();
    }
  }
  for (auto& a : agents) a.last_sync_episode = episode;
  return report;
}

double covariance_rebuild_gap(const AgentLearnerState& agent, const env::ParallelEnvSet& set) {
  double worst = 0.0;
  for (int h = 1; h <= agent.horizon; ++h) {
    Eigen::MatrixXd rebuilt =
        agent.ridge * Eigen::MatrixXd::Identity(agent.feat_dim, agent.feat_dim);
    for (const TransitionRecord& rec : agent.store[h - 1]) {
      const Eigen::VectorXd phi = set.specs[rec.agent].phi(rec.x, rec.a);
      rebuilt.noalias() += phi * phi.transpose();
    }
    worst = std::max(worst,
                     (rebuilt - agent.active_cov[h - 1].matrix()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double weight_norm_bound(int d_eff, int agents, int t, double lambda, int horizon) {
  return 2.0 * horizon * std::sqrt(static_cast<double>(d_eff) * agents * t / lambda);
}

env::PolicyTable greedy_policy(const PlanResult& plan, int num_states) {
  env::PolicyTable policy(plan.q_values.size(), std::vector<int>(num_states, 0));
  for (std::size_t h = 0; h < plan.q_values.size(); ++h) {
    for (int x = 0; x < num_states; ++x)
      policy[h][x] = act_greedy(plan.q_values[h].row(plan.own_offset + x));
  }
  return policy;
}

}  // namespace cooplsvi::parallel

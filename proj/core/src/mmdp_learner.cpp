#include "cooplsvi/mmdp_learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "cooplsvi/errors.hpp"

namespace cooplsvi::mmdp {

namespace {
constexpr double kSimplexTol = 1e-9;

void check_simplex(const Eigen::VectorXd& v) {
  if (v.minCoeff() < -kSimplexTol || std::abs(v.sum() - 1.0) > kSimplexTol)
    throw std::invalid_argument("scalarization sample is off the simplex");
}
}  // namespace

ScalarizationSampler ScalarizationSampler::dirichlet(int agents, double alpha, std::uint64_t key) {
  if (agents < 1 || !(alpha > 0.0))
    throw std::invalid_argument("ScalarizationSampler: bad dirichlet parameters");
  ScalarizationSampler s;
  s.mode = Mode::dirichlet;
  s.agents = agents;
  s.alpha = alpha;
  s.key = key;
  return s;
}

ScalarizationSampler ScalarizationSampler::point_mass(const Eigen::VectorXd& upsilon,
                                                      std::uint64_t key) {
  check_simplex(upsilon);
  ScalarizationSampler s;
  s.mode = Mode::point_mass;
  s.agents = static_cast<int>(upsilon.size());
  s.upsilon0 = upsilon;
  s.key = key;
  return s;
}

ScalarizationSampler ScalarizationSampler::finite_support(std::vector<Eigen::VectorXd> atoms,
                                                          std::vector<double> weights,
                                                          std::uint64_t key) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw std::invalid_argument("ScalarizationSampler: atoms and weights must align");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("ScalarizationSampler: negative atom weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("ScalarizationSampler: zero total weight");
  for (auto& w : weights) w /= total;
  for (const auto& atom : atoms) check_simplex(atom);
  ScalarizationSampler s;
  s.mode = Mode::finite_support;
  s.agents = static_cast<int>(atoms.front().size());
  s.atoms = std::move(atoms);
  s.atom_weights = std::move(weights);
  s.key = key;
  return s;
}

Eigen::VectorXd ScalarizationSampler::sample(int t) const {
  RngStream rng(key, StreamKind::scalarization, static_cast<std::uint64_t>(t));
  Eigen::VectorXd draw;
  switch (mode) {
    case Mode::dirichlet:
      draw = rng.next_dirichlet(agents, alpha);
      break;
    case Mode::point_mass:
      draw = upsilon0;
      break;
    case Mode::finite_support: {
      const double u = rng.next_uniform();
      double cdf = 0.0;
      draw = atoms.back();
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        cdf += atom_weights[i];
        if (u < cdf) {
          draw = atoms[i];
          break;
        }
      }
      break;
    }
  }
  check_simplex(draw);
  return draw;
}

JointLearnerState make_joint_learner(const env::MmdpSpec& spec, double lambda) {
  JointLearnerState state;
  state.agents = spec.agents;
  state.horizon = spec.horizon;
  state.feat_dim = spec.feat_dim();
  state.ridge = lambda;
  state.snapshot_cov.assign(spec.horizon, linalg::make_covariance(state.feat_dim, lambda));
  state.pending_cov.assign(spec.horizon, linalg::make_covariance(state.feat_dim, lambda));
  state.trajectory.assign(spec.horizon, {});
  state.synced_rewards.assign(spec.horizon, {});
  state.outboxes.assign(spec.agents, std::vector<std::vector<RewardRecord>>(spec.horizon));
  return state;
}

namespace {

double clip(double q, double cap) { return std::min(std::max(q, 0.0), cap); }

const std::vector<Eigen::MatrixXd>& bonus_tables(const JointLearnerState& state,
                                                 const env::MmdpSpec& spec) {
  if (state.bonus_cache_sync == state.last_sync_episode && !state.bonus_cache.empty())
    return state.bonus_cache;
  state.bonus_cache.assign(state.horizon,
                           Eigen::MatrixXd::Zero(spec.joint_states, spec.joint_actions));
  for (int h = 1; h <= state.horizon; ++h) {
    for (int x = 0; x < spec.joint_states; ++x) {
      for (int a = 0; a < spec.joint_actions; ++a) {
        const Eigen::MatrixXd phi = spec.stacked_feature(x, a);
        const Eigen::MatrixXd quad = phi.transpose() * state.snapshot_cov[h - 1].solve(phi);
        state.bonus_cache[h - 1](x, a) = linalg::spectral_norm(quad);
      }
    }
  }
  state.bonus_cache_sync = state.last_sync_episode;
  return state.bonus_cache;
}

}  // namespace

JointPlanResult plan_scalarized(const JointLearnerState& state, const env::MmdpSpec& spec,
                                const Eigen::VectorXd& upsilon, const parallel::BetaSchedule& beta,
                                int t, bool bonus_sqrt) {
  check_simplex(upsilon);
  const int H = state.horizon;
  const int S = spec.joint_states;
  const int A = spec.joint_actions;
  const int k = state.last_sync_episode;

  JointPlanResult out;
  out.beta = beta(t);
  out.weights.resize(H);
  out.q_values.assign(H, Eigen::MatrixXd::Zero(S, A));
  out.v_values = Eigen::MatrixXd::Zero(H + 1, S);

  const auto& bonus = bonus_tables(state, spec);

  for (int h = H; h >= 1; --h) {
    // Vector targets over the snapshot: y_tau = r_tau + 1_M V_{h+1}(x'_tau).
    Eigen::VectorXd u = Eigen::VectorXd::Zero(state.feat_dim);
    for (int idx = 0; idx < k; ++idx) {
      const JointTransition& tr = state.trajectory[h - 1][idx];
      const Eigen::VectorXd y =
          state.synced_rewards[h - 1][idx].array() + out.v_values(h, tr.x_next);
      u.noalias() += spec.stacked_feature(tr.x, tr.a) * y;
    }
    const Eigen::VectorXd w = state.snapshot_cov[h - 1].solve(u);
    out.weights[h - 1] = w;

    const double cap = static_cast<double>(H - h + 1);
    for (int x = 0; x < S; ++x) {
      double best = 0.0;
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd qvec = spec.stacked_feature(x, a).transpose() * w;
        const double b = bonus_sqrt ? std::sqrt(bonus[h - 1](x, a)) : bonus[h - 1](x, a);
        const double q = clip(upsilon.dot(qvec) + out.beta * b, cap);
        out.q_values[h - 1](x, a) = q;
        best = std::max(best, q);
      }
      out.v_values(h - 1, x) = best;
    }
  }
  return out;
}

int act_joint_greedy(const Eigen::Ref<const Eigen::RowVectorXd>& q_row, int budget) {
  if (q_row.size() > budget)
    throw std::invalid_argument("act_joint_greedy: joint action space exceeds the budget");
  int best = 0;
  for (int a = 1; a < q_row.size(); ++a)
    if (q_row[a] > q_row[best]) best = a;
  return best;
}

bool observe_and_check(JointLearnerState& state, const env::MmdpSpec& spec, int h,
                       const JointTransition& transition, const Eigen::VectorXd& rewards,
                       const parallel::SyncPolicy& sync) {
  if (h < 1 || h > state.horizon) throw std::invalid_argument("observe_and_check: h out of range");
  if (rewards.size() != state.agents)
    throw std::invalid_argument("observe_and_check: reward vector length mismatch");

  // Phi Phi^T folded column by column: the rank-one path keeps the cached
  // log-determinant exact through the matrix-determinant lemma.
  const Eigen::MatrixXd phi = spec.stacked_feature(transition.x, transition.a);
  for (int m = 0; m < phi.cols(); ++m)
    state.pending_cov[h - 1] = linalg::rank_one_update(state.pending_cov[h - 1], phi.col(m));
  state.trajectory[h - 1].push_back(transition);
  for (int m = 0; m < state.agents; ++m)
    state.outboxes[m][h - 1].push_back({m, transition.episode, h, rewards[m]});

  if (sync.is_never) return false;
  if (sync.is_always) return true;
  if (sync.s <= 1.0) return true;
  const double ratio = linalg::log_det_ratio(state.pending_cov[h - 1], state.snapshot_cov[h - 1]);
  return ratio >= std::log(sync.s);
}

RewardSyncReport sync_rewards(JointLearnerState& state, int episode) {
  const int delta = episode - state.last_sync_episode;
  if (delta <= 0) throw protocol_error("sync_rewards: nothing pending for this episode");

  RewardSyncReport report;
  report.episode = episode;
  report.trigger_ratios.resize(state.horizon);
  for (int h = 1; h <= state.horizon; ++h)
    report.trigger_ratios[h - 1] =
        linalg::log_det_ratio(state.pending_cov[h - 1], state.snapshot_cov[h - 1]);

  const int M = state.agents;
  for (int h = 1; h <= state.horizon; ++h) {
    if (static_cast<int>(state.trajectory[h - 1].size()) < episode)
      throw protocol_error("sync_rewards: trajectory is missing episodes");
    for (int e = state.last_sync_episode + 1; e <= episode; ++e) {
      Eigen::VectorXd r(M);
      for (int m = 0; m < M; ++m) {
        bool found = false;
        for (const RewardRecord& rec : state.outboxes[m][h - 1]) {
          if (rec.episode == e) {
            r[m] = rec.reward;
            found = true;
            break;
          }
        }
        if (!found) throw protocol_error("sync_rewards: missing reward record");
      }
      state.synced_rewards[h - 1].push_back(r);
    }
    state.snapshot_cov[h - 1] = state.pending_cov[h - 1];
  }
  for (int m = 0; m < M; ++m)
    for (auto& box : state.outboxes[m]) box.clear();

  report.uploads = M * state.horizon;
  report.downloads = M * state.horizon;
  report.payload_up = static_cast<long long>(M) * delta * state.horizon;
  report.payload_down = static_cast<long long>(M) * (M - 1) * delta * state.horizon;
  state.last_sync_episode = episode;
  return report;
}

double replica_divergence(const JointLearnerState& state, const env::MmdpSpec& spec,
                          const JointPlanResult& plan, const Eigen::VectorXd& upsilon) {
  (void)upsilon;
  const int k = state.last_sync_episode;
  const int d = state.feat_dim;
  double worst = 0.0;
  for (int h = 1; h <= state.horizon; ++h) {
    // Rebuild the snapshot regression from the broadcast history with plain
    // dense assembly, bypassing the incremental covariance path.
    Eigen::MatrixXd lambda_mat = state.ridge * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    for (int idx = 0; idx < k; ++idx) {
      const JointTransition& tr = state.trajectory[h - 1][idx];
      const Eigen::MatrixXd phi = spec.stacked_feature(tr.x, tr.a);
      lambda_mat.noalias() += phi * phi.transpose();
      const Eigen::VectorXd y =
          state.synced_rewards[h - 1][idx].array() + plan.v_values(h, tr.x_next);
      u.noalias() += phi * y;
    }
    const Eigen::VectorXd w = lambda_mat.ldlt().solve(u);
    worst = std::max(worst, (w - plan.weights[h - 1]).cwiseAbs().maxCoeff());
    worst = std::max(
        worst, (lambda_mat - state.snapshot_cov[h - 1].matrix()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double mmdp_weight_norm_bound(int feat_dim, int agents, int t, double lambda, int horizon) {
  return 2.0 * horizon * agents * std::sqrt(static_cast<double>(feat_dim) * t / lambda);
}

env::PolicyTable greedy_joint_policy(const JointPlanResult& plan, int joint_states) {
  env::PolicyTable policy(plan.q_values.size(), std::vector<int>(joint_states, 0));
  for (std::size_t h = 0; h < plan.q_values.size(); ++h)
    for (int x = 0; x < joint_states; ++x) policy[h][x] = act_joint_greedy(plan.q_values[h].row(x));
  return policy;
}

}  // namespace cooplsvi::mmdp

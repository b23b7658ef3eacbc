#include "cooplsvi/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cooplsvi/errors.hpp"
#include "cooplsvi/rng.hpp"
#include "cooplsvi/version.hpp"

namespace cooplsvi::harness {

namespace {

using nlohmann::json;

constexpr double kOptimismSlack = 1e-9;
constexpr double kClipSlack = 1e-12;
constexpr double kReplicaTol = 1e-9;

parallel::SyncPolicy to_policy(const SyncSetting& s) {
  switch (s.kind) {
    case SyncSetting::Kind::always: return parallel::SyncPolicy::always();
    case SyncSetting::Kind::never: return parallel::SyncPolicy::never();
    case SyncSetting::Kind::threshold: return parallel::SyncPolicy::threshold(s.value);
  }
  return parallel::SyncPolicy::never();
}

std::string actions_digest(const std::vector<int>& actions) {
  std::uint64_t acc = 0x9e3779b97f4a7c15ULL;
  for (int a : actions) acc = mix64(acc ^ static_cast<std::uint64_t>(a + 1));
  std::ostringstream os;
  os << std::hex << acc;
  return os.str();
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

double RunArtifacts::final_group_regret() const {
  return regret.rows.empty() ? 0.0 : regret.rows.back().group_cumulative;
}

double RunArtifacts::final_cum_max_regret() const {
  return mmdp_regret.rows.empty() ? 0.0 : mmdp_regret.rows.back().cum_max;
}

double RunArtifacts::optimism_frequency() const {
  return optimism_checks == 0 ? 1.0
                              : static_cast<double>(optimism_holds) / optimism_checks;
}

env::ParallelEnvSet build_parallel_env(const ExperimentConfig& config) {
  switch (config.mode) {
    case Mode::parallel_homogeneous: {
      const auto base = env::generate_linear_mdp(config.num_states, config.num_actions,
                                                 config.horizon, config.feat_dim, config.env_seed);
      return env::make_homogeneous_set(base, config.agents);
    }
    case Mode::parallel_small_dev: {
      const auto base = env::generate_linear_mdp(config.num_states, config.num_actions,
                                                 config.horizon, config.feat_dim, config.env_seed);
      return env::perturb_small_deviation(base, config.xi, config.agents, config.env_seed + 1);
    }
    case Mode::parallel_contextual:
      return env::build_contextual_set(config.num_states, config.num_actions, config.horizon,
                                       config.feat_dim, config.context_dim, config.agents,
                                       config.hetero_rank, config.env_seed);
    case Mode::mmdp:
      break;
  }
  throw std::invalid_argument("build_parallel_env: config is not a parallel mode");
}

env::MmdpSpec build_mmdp_env(const ExperimentConfig& config) {
  if (config.mode != Mode::mmdp)
    throw std::invalid_argument("build_mmdp_env: config is not mmdp mode");
  std::vector<int> states(config.agents, config.per_agent_states);
  std::vector<int> actions(config.agents, config.per_agent_actions);
  return env::generate_mmdp(states, actions, config.horizon, config.reward_feat_dim,
                            config.trans_feat_dim, config.env_seed);
}

mmdp::ScalarizationSampler build_sampler(const ExperimentConfig& config) {
  if (config.sampler.mode == "point_mass") {
    Eigen::VectorXd upsilon;
    if (config.sampler.upsilon.empty()) {
      upsilon = Eigen::VectorXd::Constant(config.agents, 1.0 / config.agents);
    } else {
      upsilon = Eigen::Map<const Eigen::VectorXd>(config.sampler.upsilon.data(),
                                                  config.sampler.upsilon.size());
    }
    return mmdp::ScalarizationSampler::point_mass(upsilon, config.master_seed);
  }
  if (config.sampler.mode == "finite_support") {
    std::vector<Eigen::VectorXd> atoms;
    for (const auto& atom : config.sampler.atoms)
      atoms.push_back(Eigen::Map<const Eigen::VectorXd>(atom.data(), atom.size()));
    return mmdp::ScalarizationSampler::finite_support(std::move(atoms), config.sampler.weights,
                                                      config.master_seed);
  }
  return mmdp::ScalarizationSampler::dirichlet(config.agents, config.sampler.alpha,
                                               config.master_seed);
}

RunArtifacts run_parallel_experiment(const ExperimentConfig& config,
                                     const env::ParallelEnvSet& set, const std::vector<int>& slots,
                                     const PlanHook& hook) {
  if (static_cast<int>(slots.size()) != set.agents)
    throw std::invalid_argument("run_parallel_experiment: one slot per agent");

  RunArtifacts out;
  out.mode = config.mode;
  out.episodes = config.episodes;

  const int S = set.num_states();
  const int A = set.num_actions();
  const int H = set.horizon();
  const int M = set.agents;
  const bool contextual = config.mode == Mode::parallel_contextual;

  parallel::BetaSchedule beta;
  beta.mode = contextual ? parallel::BetaMode::contextual
              : config.mode == Mode::parallel_small_dev ? parallel::BetaMode::small_deviation
                                                        : parallel::BetaMode::homogeneous;
  beta.c_beta = config.c_beta;
  beta.d_eff = set.feat_dim();
  beta.horizon = H;
  beta.agents = config.agents;
  beta.episodes = config.episodes;
  beta.xi = config.xi;

  const parallel::SyncPolicy sync = to_policy(config.sync);
  auto agents = parallel::make_agents(set, config.lambda);
  const metrics::ParallelOracles oracles = metrics::make_parallel_oracles(set);

  for (int t = 1; t <= config.episodes; ++t) {
    std::vector<env::PolicyTable> policies(M);
    std::vector<int> starts(M);
    bool any_flag = false;
    std::vector<double> episode_ratios(H, 0.0);

    for (int i = 0; i < M; ++i) {
      const parallel::PlanResult plan = contextual
                                            ? parallel::plan_contextual(agents[i], set, beta, t)
                                            : parallel::plan(agents[i], set, beta, t);
      if (hook) {
        PlanContext ctx;
        ctx.episode = t;
        ctx.agent = i;
        ctx.agent_state = &agents[i];
        ctx.plan = &plan;
        hook(ctx);
      }

      const double w_bound =
          parallel::weight_norm_bound(set.feat_dim(), config.agents, t, config.lambda, H);
      for (int h = 1; h <= H; ++h) {
        if (plan.weights[h - 1].norm() > w_bound) ++out.weight_norm_violations;
        const double cap = static_cast<double>(H - h + 1);
        if (plan.q_values[h - 1].minCoeff() < -kClipSlack ||
            plan.q_values[h - 1].maxCoeff() > cap + kClipSlack)
          ++out.clip_violations;
        if (config.track_optimism) {
          for (int x = 0; x < S; ++x) {
            for (int a = 0; a < A; ++a) {
              ++out.optimism_checks;
              if (plan.own_q(h, x, a) >= oracles.dp[i].q_star[h - 1](x, a) - kOptimismSlack)
                ++out.optimism_holds;
            }
          }
        }
      }

      policies[i] = parallel::greedy_policy(plan, S);

      RngStream init(config.master_seed, StreamKind::initial_state,
                     static_cast<std::uint64_t>(slots[i]), static_cast<std::uint64_t>(t));
      const int start = config.fixed_start >= 0 ? config.fixed_start : init.next_index(S);
      starts[i] = start;

      std::vector<bool> flags(H, false);
      std::vector<int> actions(H, 0);
      int x = start;
      for (int h = 1; h <= H; ++h) {
        const int a = policies[i][h - 1][x];
        actions[h - 1] = a;
        RngStream rng(config.master_seed, StreamKind::transition,
                      static_cast<std::uint64_t>(slots[i]), static_cast<std::uint64_t>(t),
                      static_cast<std::uint64_t>(h));
        const env::StepResult sr = env::step(set.specs[i], x, a, h, rng);
        parallel::TransitionRecord rec{i, t, h, x, a, sr.next_state, sr.reward};
        flags[h - 1] = parallel::observe(agents[i], set, h, rec, sync);
        any_flag = any_flag || flags[h - 1];
        x = sr.next_state;
      }

      json line;
      line["episode"] = t;
      line["agent"] = i;
      line["sync_flags"] = flags;
      json ratios = json::array();
      for (int h = 1; h <= H; ++h) {
        const double r =
            linalg::log_det_ratio(agents[i].active_cov[h - 1], agents[i].synced_cov[h - 1]);
        ratios.push_back(r);
        episode_ratios[h - 1] = std::max(episode_ratios[h - 1], r);
      }
      line["logdet_ratios"] = std::move(ratios);
      line["beta"] = plan.beta;
      line["actions_digest"] = actions_digest(actions);
      out.event_lines.push_back(line.dump());
    }

    metrics::record_parallel_regret(out.regret, set, oracles, t, policies, starts);

    metrics::CommRow comm_row;
    comm_row.episode = t;
    comm_row.ratios = episode_ratios;
    if (any_flag) {
      const parallel::SyncReport report = parallel::server_sync(agents, set, H, t);
      comm_row.synced = true;
      comm_row.ratios = report.trigger_ratios;
      comm_row.uploads = report.uploads;
      comm_row.downloads = report.downloads;
      comm_row.payload_up = report.payload_up;
      comm_row.payload_down = report.payload_down;
    }
    out.comm.rows.push_back(std::move(comm_row));
  }
  return out;
}

RunArtifacts run_mmdp_experiment(const ExperimentConfig& config, const env::MmdpSpec& spec,
                                 const PlanHook& hook) {
  RunArtifacts out;
  out.mode = Mode::mmdp;
  out.episodes = config.episodes;

  const int H = spec.horizon;
  const int JS = spec.joint_states;

  parallel::BetaSchedule beta;
  beta.mode = parallel::BetaMode::homogeneous;
  beta.c_beta = config.c_beta;
  beta.d_eff = spec.feat_dim();
  beta.horizon = H;
  beta.agents = spec.agents;
  beta.episodes = config.episodes;

  const parallel::SyncPolicy sync = to_policy(config.sync);
  auto state = mmdp::make_joint_learner(spec, config.lambda);
  const auto sampler = build_sampler(config);
  metrics::ScalarizedDpCache cache;

  for (int t = 1; t <= config.episodes; ++t) {
    const Eigen::VectorXd upsilon = sampler.sample(t);
    const mmdp::JointPlanResult plan =
        mmdp::plan_scalarized(state, spec, upsilon, beta, t, config.bonus_sqrt);

    if (hook) {
      PlanContext ctx;
      ctx.episode = t;
      ctx.joint_state = &state;
      ctx.joint_plan = &plan;
      ctx.upsilon = &upsilon;
      hook(ctx);
    }

    double divergence = 0.0;
    if (config.replica_check_every > 0 && t % config.replica_check_every == 0) {
      divergence = mmdp::replica_divergence(state, spec, plan, upsilon);
      if (divergence > kReplicaTol)
        throw protocol_error("run_mmdp_experiment: replica divergence above tolerance");
    }

    const double w_bound =
        mmdp::mmdp_weight_norm_bound(spec.feat_dim(), spec.agents, t, config.lambda, H);
    for (int h = 1; h <= H; ++h) {
      if (plan.weights[h - 1].norm() > w_bound) ++out.weight_norm_violations;
      const double cap = static_cast<double>(H - h + 1);
      if (plan.q_values[h - 1].minCoeff() < -kClipSlack ||
          plan.q_values[h - 1].maxCoeff() > cap + kClipSlack)
        ++out.clip_violations;
    }

    const env::PolicyTable policy = mmdp::greedy_joint_policy(plan, JS);
    out.stored_policies.push_back(policy);

    RngStream init(config.master_seed, StreamKind::initial_state, 0, static_cast<std::uint64_t>(t));
    const int start = config.fixed_start >= 0 ? config.fixed_start : init.next_index(JS);

    bool flag = false;
    std::vector<int> actions(H, 0);
    int x = start;
    for (int h = 1; h <= H; ++h) {
      const int a = policy[h - 1][x];
      actions[h - 1] = a;
      RngStream rng(config.master_seed, StreamKind::transition, 0, static_cast<std::uint64_t>(t),
                    static_cast<std::uint64_t>(h));
      const env::MmdpStepResult sr = env::step(spec, x, a, h, rng);
      const bool f =
          mmdp::observe_and_check(state, spec, h, {t, x, a, sr.next_state}, sr.rewards, sync);
      flag = flag || f;
      x = sr.next_state;
    }

    metrics::record_mmdp_regret(out.mmdp_regret, spec, cache, t, upsilon, policy, start);

    metrics::CommRow comm_row;
    comm_row.episode = t;
    comm_row.ratios.resize(H);
    for (int h = 1; h <= H; ++h)
      comm_row.ratios[h - 1] =
          linalg::log_det_ratio(state.pending_cov[h - 1], state.snapshot_cov[h - 1]);
    if (flag) {
      const mmdp::RewardSyncReport report = mmdp::sync_rewards(state, t);
      comm_row.synced = true;
      comm_row.ratios = report.trigger_ratios;
      comm_row.uploads = report.uploads;
      comm_row.downloads = report.downloads;
      comm_row.payload_up = report.payload_up;
      comm_row.payload_down = report.payload_down;
    }
    out.comm.rows.push_back(comm_row);

    json line;
    line["episode"] = t;
    line["upsilon"] = vector_json(upsilon);
    line["sync_flag"] = flag;
    line["logdet_ratios"] = comm_row.ratios;
    line["beta"] = plan.beta;
    line["actions_digest"] = actions_digest(actions);
    line["replica_divergence"] = divergence;
    out.event_lines.push_back(line.dump());
  }

  if (!out.stored_policies.empty() && config.bayes_samples > 0) {
    out.bayes = metrics::estimate_bayes_regret(spec, out.stored_policies, sampler,
                                               config.bayes_samples, cache);
  }
  return out;
}

RunArtifacts run_experiment(const ExperimentConfig& config, const PlanHook& hook) {
  if (config.mode == Mode::mmdp) {
    const env::MmdpSpec spec = build_mmdp_env(config);
    return run_mmdp_experiment(config, spec, hook);
  }
  const env::ParallelEnvSet set = build_parallel_env(config);
  std::vector<int> slots(set.agents);
  for (int i = 0; i < set.agents; ++i) slots[i] = i;
  return run_parallel_experiment(config, set, slots, hook);
}

std::vector<BaselineRun> run_baselines(const ExperimentConfig& config) {
  if (config.mode == Mode::mmdp)
    throw std::invalid_argument("run_baselines: parallel modes only");
  std::vector<BaselineRun> runs;
  for (const char* name : {"never", "always", "threshold"}) {
    ExperimentConfig c = config;
    if (std::string(name) == "never") {
      c.sync = SyncSetting::parse("never");
    } else if (std::string(name) == "always") {
      c.sync = SyncSetting::parse("always");
    }
    runs.push_back({name, run_experiment(c)});
  }
  return runs;
}

std::string emit_report(const ExperimentConfig& config, const RunArtifacts& artifacts,
                        int indent) {
  json j;
  j["version"] = kVersion;
  j["mode"] = mode_name(config.mode);
  j["episodes"] = artifacts.episodes;

  std::vector<double> cumulative;
  if (config.mode == Mode::mmdp) {
    for (const auto& row : artifacts.mmdp_regret.rows) cumulative.push_back(row.cum_max);
    j["final_cumulative_regret"] = artifacts.final_cum_max_regret();
    j["final_cumulative_fixed_start_regret"] =
        artifacts.mmdp_regret.rows.empty() ? 0.0 : artifacts.mmdp_regret.rows.back().cum_fixed;
    j["bayes_regret"] = {{"mean", artifacts.bayes.mean},
                         {"std_error", artifacts.bayes.std_error},
                         {"samples", artifacts.bayes.samples}};
    if (artifacts.episodes > 0) {
      // Recorded next to the Bayes estimate; the o(1) gap term decays too
      // slowly to assert at desk scale.
      j["cumulative_regret_over_T"] = artifacts.final_cum_max_regret() / artifacts.episodes;
    }
  } else {
    for (const auto& row : artifacts.regret.rows) cumulative.push_back(row.group_cumulative);
    j["final_group_regret"] = artifacts.final_group_regret();
  }

  const auto ratio = metrics::sublinearity_ratio(cumulative);
  j["sublinearity_ratio"] = ratio ? json(*ratio) : json();

  json comm;
  comm["sync_episodes"] = artifacts.comm.sync_episodes();
  comm["payload_up"] = artifacts.comm.total_payload_up();
  comm["payload_down"] = artifacts.comm.total_payload_down();
  metrics::BoundReport bound;
  if (config.sync.kind == SyncSetting::Kind::never) {
    bound.measured = artifacts.comm.sync_episodes();
    bound.bound = 0.0;
    bound.ok = artifacts.comm.sync_episodes() == 0;
    bound.rule = "never-sync sentinel: n = 0";
  } else if (config.sync.kind == SyncSetting::Kind::always) {
    bound.measured = artifacts.comm.sync_episodes();
    bound.bound = artifacts.episodes;
    bound.ok = bound.measured <= bound.bound;
    bound.rule = "always-sync sentinel: n <= T";
  } else if (config.mode == Mode::mmdp) {
    bound = metrics::mmdp_comm_bound(artifacts.comm.sync_episodes(),
                                     build_mmdp_env(config).feat_dim(), config.horizon,
                                     artifacts.episodes, config.sync.value, config.agents);
  } else {
    const int d_eff =
        config.mode == Mode::parallel_contextual ? config.feat_dim + config.context_dim
                                                 : config.feat_dim;
    bound = metrics::parallel_comm_bound(artifacts.comm.sync_episodes(), d_eff, config.horizon,
                                         artifacts.episodes, config.sync.value, config.agents);
  }
  comm["bound"] = {{"measured", bound.measured},
                   {"bound", bound.bound},
                   {"ok", bound.ok},
                   {"rule", bound.rule}};
  j["comm"] = std::move(comm);

  j["optimism_frequency"] = artifacts.optimism_frequency();
  j["invariant_violations"] = {{"weight_norm", artifacts.weight_norm_violations},
                               {"clip", artifacts.clip_violations},
                               {"replica", artifacts.replica_violations}};
  return j.dump(indent);
}

void write_run_artifacts(const std::string& dir, const ExperimentConfig& config,
                         const RunArtifacts& artifacts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "config.json");
    os << config.to_json() << "\n";
  }
  {
    std::ofstream os(fs::path(dir) / "regret.csv");
    if (config.mode == Mode::mmdp)
      artifacts.mmdp_regret.write_csv(os);
    else
      artifacts.regret.write_csv(os);
  }
  {
    std::ofstream os(fs::path(dir) / "comm.csv");
    artifacts.comm.write_csv(os);
  }
  {
    std::ofstream os(fs::path(dir) / "events.jsonl");
    for (const auto& line : artifacts.event_lines) os << line << "\n";
  }
  {
    std::ofstream os(fs::path(dir) / "summary.json");
    os << emit_report(config, artifacts) << "\n";
  }
}

}  // namespace cooplsvi::harness

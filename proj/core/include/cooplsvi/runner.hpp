#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cooplsvi/config.hpp"
#include "cooplsvi/metrics.hpp"
#include "cooplsvi/mmdp_learner.hpp"
#include "cooplsvi/parallel_learner.hpp"

namespace cooplsvi::harness {

/// Everything a finished run leaves behind: exact ledgers, the event log,
/// invariant counters (all must stay zero), and for MMDP runs the stored
/// policy set plus the Bayes-regret estimate.
struct RunArtifacts {
  Mode mode = Mode::parallel_homogeneous;
  int episodes = 0;

  metrics::RegretLedger regret;
  metrics::MmdpRegretLedger mmdp_regret;
  metrics::CommLedger comm;
  std::vector<std::string> event_lines;

  long long optimism_checks = 0;
  long long optimism_holds = 0;
  int weight_norm_violations = 0;
  int clip_violations = 0;
  int replica_violations = 0;

  std::vector<env::PolicyTable> stored_policies;  // mmdp greedy tables per episode
  metrics::BayesEstimate bayes;

  double final_group_regret() const;
  double final_cum_max_regret() const;
  double optimism_frequency() const;
};

/// Inspection hook called right after each planning pass, before acting.
struct PlanContext {
  int episode = 0;
  int agent = -1;  // -1 for the joint MMDP plan
  const parallel::AgentLearnerState* agent_state = nullptr;
  const parallel::PlanResult* plan = nullptr;
  const mmdp::JointLearnerState* joint_state = nullptr;
  const mmdp::JointPlanResult* joint_plan = nullptr;
  const Eigen::VectorXd* upsilon = nullptr;
};
using PlanHook = std::function<void(const PlanContext&)>;

/// Builds the environment dictated by the config.
env::ParallelEnvSet build_parallel_env(const ExperimentConfig& config);
env::MmdpSpec build_mmdp_env(const ExperimentConfig& config);
mmdp::ScalarizationSampler build_sampler(const ExperimentConfig& config);

/// T episodes end to end, deterministic in (config, master_seed).
RunArtifacts run_experiment(const ExperimentConfig& config, const PlanHook& hook = {});

/// Parallel run over an explicit environment. `slots[i]` keys agent i's
/// random streams, so a sliced single-agent environment replays exactly the
/// same trajectory the agent would see inside the full run. The beta
/// schedule and weight bounds use config.agents, not the slice size.
RunArtifacts run_parallel_experiment(const ExperimentConfig& config,
                                     const env::ParallelEnvSet& set, const std::vector<int>& slots,
                                     const PlanHook& hook = {});

RunArtifacts run_mmdp_experiment(const ExperimentConfig& config, const env::MmdpSpec& spec,
                                 const PlanHook& hook = {});

struct BaselineRun {
  std::string name;
  RunArtifacts artifacts;
};

/// never-sync, always-sync, and the configured threshold on the same
/// environment and seeds.
std::vector<BaselineRun> run_baselines(const ExperimentConfig& config);

/// JSON summary: final regrets, sublinearity diagnostic, communication
/// totals with bound verdicts, optimism frequency, invariant counters.
std::string emit_report(const ExperimentConfig& config, const RunArtifacts& artifacts,
                        int indent = 2);

/// Serializes a full run into `dir`: resolved config, regret.csv, comm.csv,
/// events.jsonl and summary.json.
void write_run_artifacts(const std::string& dir, const ExperimentConfig& config,
                         const RunArtifacts& artifacts);

}  // namespace cooplsvi::harness

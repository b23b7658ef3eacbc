#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/mdp.hpp"
#include "cooplsvi/mmdp_env.hpp"
#include "cooplsvi/parallel_env.hpp"

namespace cooplsvi::mmdp {
struct ScalarizationSampler;
}

namespace cooplsvi::metrics {

/// Exact per-episode regret for parallel runs; all entries come from DP
/// oracles, never from sampled returns.
struct ParallelRegretRow {
  int episode = 0;
  std::vector<double> agent_regret;
  double group_instant = 0.0;
  double group_cumulative = 0.0;
};

struct RegretLedger {
  std::vector<ParallelRegretRow> rows;
  void write_csv(std::ostream& os) const;
};

struct MmdpRegretRow {
  int episode = 0;
  Eigen::VectorXd upsilon;
  double fixed_start = 0.0;
  double max_state = 0.0;
  double cum_fixed = 0.0;
  double cum_max = 0.0;
};

struct MmdpRegretLedger {
  std::vector<MmdpRegretRow> rows;
  void write_csv(std::ostream& os) const;
};

struct CommRow {
  int episode = 0;
  bool synced = false;
  std::vector<double> ratios;  // per h at trigger time
  int uploads = 0;
  int downloads = 0;
  long long payload_up = 0;
  long long payload_down = 0;
};

struct CommLedger {
  std::vector<CommRow> rows;
  int sync_episodes() const;
  long long total_payload_up() const;
  long long total_payload_down() const;
  void write_csv(std::ostream& os) const;
};

/// Per-agent exact DP solutions for a parallel set, computed once per run.
struct ParallelOracles {
  std::vector<env::DpSolution> dp;
};

ParallelOracles make_parallel_oracles(const env::ParallelEnvSet& set);

/// Appends one exact-regret row: V*_m at the start state minus the executed
/// policy's exact value, per agent.
void record_parallel_regret(RegretLedger& ledger, const env::ParallelEnvSet& set,
                            const ParallelOracles& oracles, int episode,
                            const std::vector<env::PolicyTable>& policies,
                            const std::vector<int>& starts);

/// Scalarized DP solutions memoized on upsilon rounded to 12 decimals.
class ScalarizedDpCache {
 public:
  const env::DpSolution& get(const env::MmdpSpec& spec, const Eigen::VectorXd& upsilon);
  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::vector<long long>, env::DpSolution> cache_;
};

/// Appends both the fixed-start and the max-over-states regret variant.
void record_mmdp_regret(MmdpRegretLedger& ledger, const env::MmdpSpec& spec,
                        ScalarizedDpCache& cache, int episode, const Eigen::VectorXd& upsilon,
                        const env::PolicyTable& policy, int start_state);

struct BayesEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Monte-Carlo Bayes regret of a stored policy set: for each sampled upsilon,
/// the exact shortfall of the best stored policy against the
/// upsilon-optimal one, maximized over start states. Policies are
/// deduplicated by their action tables before evaluation.
BayesEstimate estimate_bayes_regret(const env::MmdpSpec& spec,
                                    const std::vector<env::PolicyTable>& policies,
                                    const mmdp::ScalarizationSampler& sampler, int n_samples,
                                    ScalarizedDpCache& cache,
                                    std::uint64_t sample_offset = 1u << 20);

struct BoundReport {
  double measured = 0.0;
  double bound = 0.0;
  bool ok = false;
  std::string rule;
};

/// n <= 2 H sqrt(d (T/S) ln(MT)) + 4 H.
BoundReport parallel_comm_bound(int sync_episodes, int d, int horizon, int episodes, double s,
                                int agents);

/// n <= d H log_S(1 + MT/d) + H for S > 1; n == T exactly for S <= 1.
BoundReport mmdp_comm_bound(int sync_episodes, int d, int horizon, int episodes, double s,
                            int agents);

/// R(T) / R(T/2) from a cumulative-regret column; growth at sqrt(T) maps to
/// sqrt(2). Returns nullopt when the half-time value is not positive.
std::optional<double> sublinearity_ratio(const std::vector<double>& cumulative);

}  // namespace cooplsvi::metrics

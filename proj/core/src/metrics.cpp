#include "cooplsvi/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <stdexcept>

#include "cooplsvi/mmdp_learner.hpp"

namespace cooplsvi::metrics {

namespace {

constexpr double kRegretFloor = -1e-9;

void put(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

}  // namespace

void RegretLedger::write_csv(std::ostream& os) const {
  const int agents = rows.empty() ? 0 : static_cast<int>(rows.front().agent_regret.size());
  os << "episode";
  for (int m = 0; m < agents; ++m) os << ",agent" << m << "_regret";
  os << ",group_regret,cumulative_group_regret\n";
  for (const auto& row : rows) {
    os << row.episode;
    for (double r : row.agent_regret) {
      os << ",";
      put(os, r);
    }
    os << ",";
    put(os, row.group_instant);
    os << ",";
    put(os, row.group_cumulative);
    os << "\n";
  }
}

void MmdpRegretLedger::write_csv(std::ostream& os) const {
  const int agents = rows.empty() ? 0 : static_cast<int>(rows.front().upsilon.size());
  os << "episode";
  for (int m = 0; m < agents; ++m) os << ",upsilon" << m;
  os << ",fixed_start_regret,max_state_regret,cumulative_fixed_start_regret,"
        "cumulative_max_state_regret\n";
  for (const auto& row : rows) {
    os << row.episode;
    for (int m = 0; m < row.upsilon.size(); ++m) {
      os << ",";
      put(os, row.upsilon[m]);
    }
    os << ",";
    put(os, row.fixed_start);
    os << ",";
    put(os, row.max_state);
    os << ",";
    put(os, row.cum_fixed);
    os << ",";
    put(os, row.cum_max);
    os << "\n";
  }
}

int CommLedger::sync_episodes() const {
  int n = 0;
  for (const auto& row : rows) n += row.synced ? 1 : 0;
  return n;
}

long long CommLedger::total_payload_up() const {
  long long total = 0;
  for (const auto& row : rows) total += row.payload_up;
  return total;
}

long long CommLedger::total_payload_down() const {
  long long total = 0;
  for (const auto& row : rows) total += row.payload_down;
  return total;
}

void CommLedger::write_csv(std::ostream& os) const {
  const int horizon = rows.empty() ? 0 : static_cast<int>(rows.front().ratios.size());
  os << "episode,synced";
  for (int h = 1; h <= horizon; ++h) os << ",ratio_h" << h;
  os << ",uploads,downloads,payload_up,payload_down\n";
  for (const auto& row : rows) {
    os << row.episode << "," << (row.synced ? 1 : 0);
    for (double r : row.ratios) {
      os << ",";
      put(os, r);
    }
    os << "," << row.uploads << "," << row.downloads << "," << row.payload_up << ","
       << row.payload_down << "\n";
  }
}

ParallelOracles make_parallel_oracles(const env::ParallelEnvSet& set) {
  ParallelOracles oracles;
  oracles.dp.reserve(set.agents);
  for (int m = 0; m < set.agents; ++m) oracles.dp.push_back(env::exact_q_star(set.specs[m]));
  return oracles;
}

void record_parallel_regret(RegretLedger& ledger, const env::ParallelEnvSet& set,
                            const ParallelOracles& oracles, int episode,
                            const std::vector<env::PolicyTable>& policies,
                            const std::vector<int>& starts) {
  if (static_cast<int>(policies.size()) != set.agents ||
      static_cast<int>(starts.size()) != set.agents)
    throw std::invalid_argument("record_parallel_regret: one policy and start per agent");

  ParallelRegretRow row;
  row.episode = episode;
  row.agent_regret.resize(set.agents);
  for (int m = 0; m < set.agents; ++m) {
    const Eigen::MatrixXd values = env::evaluate_policy(set.specs[m], policies[m]);
    const double regret = oracles.dp[m].v_star(0, starts[m]) - values(0, starts[m]);
    if (regret < kRegretFloor)
      throw std::logic_error("record_parallel_regret: executed policy beats the optimum");
    row.agent_regret[m] = regret;
    row.group_instant += regret;
  }
  row.group_cumulative =
      (ledger.rows.empty() ? 0.0 : ledger.rows.back().group_cumulative) + row.group_instant;
  ledger.rows.push_back(std::move(row));
}

const env::DpSolution& ScalarizedDpCache::get(const env::MmdpSpec& spec,
                                              const Eigen::VectorXd& upsilon) {
  std::vector<long long> key(upsilon.size());
  for (int i = 0; i < upsilon.size(); ++i)
    key[i] = static_cast<long long>(std::llround(upsilon[i] * 1e12));
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(std::move(key), env::exact_scalarized_q_star(spec, upsilon)).first;
  return it->second;
}

void record_mmdp_regret(MmdpRegretLedger& ledger, const env::MmdpSpec& spec,
                        ScalarizedDpCache& cache, int episode, const Eigen::VectorXd& upsilon,
                        const env::PolicyTable& policy, int start_state) {
  const env::DpSolution& sol = cache.get(spec, upsilon);
  const std::vector<Eigen::MatrixXd> values = env::evaluate_policy_vector(spec, policy);

  MmdpRegretRow row;
  row.episode = episode;
  row.upsilon = upsilon;
  double max_gap = 0.0;
  for (int x = 0; x < spec.joint_states; ++x) {
    const double gap = sol.v_star(0, x) - upsilon.dot(values[0].row(x).transpose());
    if (gap < kRegretFloor)
      throw std::logic_error("record_mmdp_regret: executed policy beats the optimum");
    max_gap = std::max(max_gap, gap);
    if (x == start_state) row.fixed_start = gap;
  }
  row.max_state = max_gap;
  row.cum_fixed = (ledger.rows.empty() ? 0.0 : ledger.rows.back().cum_fixed) + row.fixed_start;
  row.cum_max = (ledger.rows.empty() ? 0.0 : ledger.rows.back().cum_max) + row.max_state;
  ledger.rows.push_back(std::move(row));
}

BayesEstimate estimate_bayes_regret(const env::MmdpSpec& spec,
                                    const std::vector<env::PolicyTable>& policies,
                                    const mmdp::ScalarizationSampler& sampler, int n_samples,
                                    ScalarizedDpCache& cache, std::uint64_t sample_offset) {
  if (policies.empty()) throw std::invalid_argument("estimate_bayes_regret: empty policy set");
  if (n_samples < 1) throw std::invalid_argument("estimate_bayes_regret: need at least 1 sample");

  // Deduplicate by action table, then evaluate each survivor once; the
  // scalarized value for any upsilon is a dot product by linearity.
  std::set<env::PolicyTable> unique(policies.begin(), policies.end());
  std::vector<Eigen::MatrixXd> first_step_values;  // JS x M
  first_step_values.reserve(unique.size());
  for (const auto& policy : unique)
    first_step_values.push_back(env::evaluate_policy_vector(spec, policy)[0]);

  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd upsilon = sampler.sample(static_cast<int>(sample_offset) + s);
    const env::DpSolution& sol = cache.get(spec, upsilon);
    double gap = 0.0;
    for (int x = 0; x < spec.joint_states; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& v : first_step_values)
        best = std::max(best, upsilon.dot(v.row(x).transpose()));
      gap = std::max(gap, sol.v_star(0, x) - best);
    }
    sum += gap;
    sum_sq += gap * gap;
  }
  BayesEstimate est;
  est.samples = n_samples;
  est.mean = sum / n_samples;
  const double var = std::max(sum_sq / n_samples - est.mean * est.mean, 0.0);
  est.std_error = n_samples > 1 ? std::sqrt(var / (n_samples - 1)) : 0.0;
  return est;
}

BoundReport parallel_comm_bound(int sync_episodes, int d, int horizon, int episodes, double s,
                                int agents) {
  BoundReport report;
  report.measured = sync_episodes;
  const double log_mt = std::log(std::max(static_cast<double>(agents) * episodes, 1.0));
  report.bound = 2.0 * horizon * std::sqrt(d * (episodes / s) * log_mt) + 4.0 * horizon;
  report.ok = report.measured <= report.bound;
  report.rule = "n <= 2H sqrt(d (T/S) ln(MT)) + 4H";
  return report;
}

BoundReport mmdp_comm_bound(int sync_episodes, int d, int horizon, int episodes, double s,
                            int agents) {
  BoundReport report;
  report.measured = sync_episodes;
  if (s <= 1.0) {
    report.bound = episodes;
    report.ok = sync_episodes == episodes;
    report.rule = "S <= 1 implies n = T";
  } else {
    report.bound =
        d * horizon * std::log1p(static_cast<double>(agents) * episodes / d) / std::log(s) +
        horizon;
    report.ok = report.measured <= report.bound;
    report.rule = "n <= d H log_S(1 + MT/d) + H";
  }
  return report;
}

std::optional<double> sublinearity_ratio(const std::vector<double>& cumulative) {
  if (cumulative.size() < 2) return std::nullopt;
  const std::size_t half = cumulative.size() / 2;
  const double at_half = cumulative[half - 1];
  if (!(at_half > 0.0)) return std::nullopt;
  return cumulative.back() / at_half;
}

}  // namespace cooplsvi::metrics

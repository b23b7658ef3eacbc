#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "cooplsvi/runner.hpp"

using namespace cooplsvi;
using namespace cooplsvi::harness;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.mode = Mode::parallel_homogeneous;
  cfg.num_states = 3;
  cfg.num_actions = 2;
  cfg.horizon = 2;
  cfg.feat_dim = 3;
  cfg.agents = 2;
  cfg.episodes = 40;
  cfg.sync = SyncSetting::parse("5.0");
  cfg.env_seed = 3;
  cfg.master_seed = 11;
  return cfg;
}

std::string regret_csv(const ExperimentConfig& cfg, const RunArtifacts& artifacts) {
  std::ostringstream os;
  if (cfg.mode == Mode::mmdp)
    artifacts.mmdp_regret.write_csv(os);
  else
    artifacts.regret.write_csv(os);
  return os.str();
}

}  // namespace

TEST_CASE("config schema: defaults, unknown keys, field paths") {
  const auto cfg = ExperimentConfig::from_json(R"({"mode": "parallel_homogeneous"})");
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.c_beta == 1.0);

  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(R"({"mode":"mmdp","bogus":1})"),
                       doctest::Contains(".bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_json(R"({"mode":"mmdp","env":{"num_states":3,"oops":1}})"),
      doctest::Contains(".env.oops"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(R"({"mode":"warp"})"),
                       doctest::Contains(".mode"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(R"({"mode":"mmdp","algo":{"episodes":-3}})"),
                       doctest::Contains(".algo.episodes"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json("not json"), std::invalid_argument);

  // Round trip through the resolved form.
  const auto base = small_config();
  const auto back = ExperimentConfig::from_json(base.to_json());
  CHECK(back.to_json() == base.to_json());

  CHECK(SyncSetting::parse("always").kind == SyncSetting::Kind::always);
  CHECK(SyncSetting::parse("2.5").value == 2.5);
  CHECK_THROWS_AS(SyncSetting::parse("-1"), std::invalid_argument);
}

TEST_CASE("T = 0 yields empty ledgers and a valid summary") {
  auto cfg = small_config();
  cfg.episodes = 0;
  const auto artifacts = run_experiment(cfg);
  CHECK(artifacts.regret.rows.empty());
  CHECK(artifacts.comm.rows.empty());
  const auto report = json::parse(emit_report(cfg, artifacts));
  CHECK(report.at("final_group_regret") == 0.0);
  CHECK(report.at("sublinearity_ratio").is_null());
}

TEST_CASE("identical config and seed produce byte-identical outputs") {
  const auto cfg = small_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  CHECK(regret_csv(cfg, a) == regret_csv(cfg, b));
  std::ostringstream ca, cb;
  a.comm.write_csv(ca);
  b.comm.write_csv(cb);
  CHECK(ca.str() == cb.str());
  CHECK(a.event_lines == b.event_lines);

  auto mmdp_cfg = small_config();
  mmdp_cfg.mode = Mode::mmdp;
  mmdp_cfg.per_agent_states = 2;
  mmdp_cfg.per_agent_actions = 2;
  mmdp_cfg.reward_feat_dim = 2;
  mmdp_cfg.trans_feat_dim = 2;
  mmdp_cfg.episodes = 25;
  mmdp_cfg.sync = SyncSetting::parse("1.5");
  const auto ma = run_experiment(mmdp_cfg);
  const auto mb = run_experiment(mmdp_cfg);
  CHECK(regret_csv(mmdp_cfg, ma) == regret_csv(mmdp_cfg, mb));
  CHECK(ma.event_lines == mb.event_lines);
}

TEST_CASE("baselines: M = 1 settings coincide; never-sync equals independent runs") {
  // With one agent there is nothing to share: all three baselines coincide.
  auto solo = small_config();
  solo.agents = 1;
  const auto runs = run_baselines(solo);
  REQUIRE(runs.size() == 3);
  const std::string never_csv = regret_csv(solo, runs[0].artifacts);
  CHECK(never_csv == regret_csv(solo, runs[1].artifacts));
  CHECK(never_csv == regret_csv(solo, runs[2].artifacts));

  // Never-sync group ledger equals M independent single-agent runs with
  // matched per-agent slots, bitwise on the regret columns.
  auto cfg = small_config();
  cfg.agents = 3;
  cfg.sync = SyncSetting::parse("never");
  const auto full = run_experiment(cfg);

  const auto set = build_parallel_env(cfg);
  for (int m = 0; m < cfg.agents; ++m) {
    env::ParallelEnvSet slice;
    slice.flavor = set.flavor;
    slice.agents = 1;
    slice.specs = {set.specs[m]};
    slice.base_feat_dim = set.base_feat_dim;
    const auto solo_run = run_parallel_experiment(cfg, slice, {m});
    REQUIRE(solo_run.regret.rows.size() == full.regret.rows.size());
    for (std::size_t t = 0; t < full.regret.rows.size(); ++t) {
      CHECK(solo_run.regret.rows[t].agent_regret[0] == full.regret.rows[t].agent_regret[m]);
    }
  }
}

TEST_CASE("baselines: threshold curve sits between the extremes on most seeds") {
  auto cfg = small_config();
  cfg.agents = 3;
  cfg.num_states = 4;
  cfg.feat_dim = 4;
  cfg.episodes = 200;
  cfg.sync = SyncSetting::parse("5");
  cfg.track_optimism = false;

  int between = 0;
  for (int seed = 0; seed < 10; ++seed) {
    cfg.master_seed = 700 + seed;
    const auto runs = run_baselines(cfg);
    const double never = runs[0].artifacts.final_group_regret();
    const double always = runs[1].artifacts.final_group_regret();
    const double threshold = runs[2].artifacts.final_group_regret();
    const double lo = std::min(never, always), hi = std::max(never, always);
    between += (threshold >= lo - 1e-9 && threshold <= hi + 1e-9) ? 1 : 0;
  }
  CHECK(between >= 7);
}

TEST_CASE("always-sync beats never-sync in the mean over paired seeds") {
  auto cfg = small_config();
  cfg.agents = 3;
  cfg.num_states = 4;
  cfg.feat_dim = 4;
  cfg.episodes = 300;
  cfg.track_optimism = false;

  double always = 0.0, never = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    cfg.master_seed = 900 + seed;
    cfg.sync = SyncSetting::parse("always");
    always += run_experiment(cfg).final_group_regret();
    cfg.sync = SyncSetting::parse("never");
    never += run_experiment(cfg).final_group_regret();
  }
  CHECK(always / 10.0 <= never / 10.0);
}

TEST_CASE("emit_report: zero-reward env, synthetic ratio, bound passthrough") {
  auto cfg = small_config();
  cfg.episodes = 20;

  // Zero-reward environment: every regret field is zero.
  // Build it by evaluating a homogeneous set whose weights are zeroed.
  auto base = env::generate_linear_mdp(cfg.num_states, cfg.num_actions, cfg.horizon, cfg.feat_dim,
                                       cfg.env_seed);
  for (auto& theta : base.reward_weights) theta.setZero();
  const auto set = env::make_homogeneous_set(base, cfg.agents);
  std::vector<int> slots{0, 1};
  const auto artifacts = run_parallel_experiment(cfg, set, slots);
  CHECK(artifacts.final_group_regret() == 0.0);

  // Bound verdict mirrors verify output exactly.
  const auto report = json::parse(emit_report(cfg, artifacts));
  const auto bound = metrics::parallel_comm_bound(artifacts.comm.sync_episodes(), cfg.feat_dim,
                                                  cfg.horizon, cfg.episodes, cfg.sync.value,
                                                  cfg.agents);
  CHECK(report.at("comm").at("bound").at("measured") == bound.measured);
  CHECK(report.at("comm").at("bound").at("bound") == bound.bound);
  CHECK(report.at("comm").at("bound").at("ok") == bound.ok);

  // Synthetic sqrt ledger: ratio sqrt(2) within 1e-9.
  RunArtifacts synthetic;
  synthetic.mode = Mode::parallel_homogeneous;
  synthetic.episodes = 400;
  for (int t = 1; t <= 400; ++t) {
    metrics::ParallelRegretRow row;
    row.episode = t;
    row.agent_regret = {0.0};
    row.group_instant = std::sqrt(static_cast<double>(t)) - std::sqrt(t - 1.0);
    row.group_cumulative = std::sqrt(static_cast<double>(t));
    synthetic.regret.rows.push_back(row);
  }
  const auto synth_report = json::parse(emit_report(cfg, synthetic));
  CHECK(std::abs(synth_report.at("sublinearity_ratio").get<double>() - std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("run artifacts land on disk, self-describing") {
  namespace fs = std::filesystem;
  auto cfg = small_config();
  cfg.episodes = 10;
  const fs::path dir = fs::temp_directory_path() / "cooplsvi_harness_test_run";
  fs::remove_all(dir);
  const auto artifacts = run_experiment(cfg);
  write_run_artifacts(dir.string(), cfg, artifacts);
  for (const char* name : {"config.json", "regret.csv", "comm.csv", "events.jsonl", "summary.json"})
    CHECK(fs::exists(dir / name));
  std::ifstream is(dir / "config.json");
  std::stringstream buffer;
  buffer << is.rdbuf();
  const auto round = ExperimentConfig::from_json(buffer.str());
  CHECK(round.episodes == cfg.episodes);
  fs::remove_all(dir);
}

TEST_CASE("mmdp run produces regret rows, comm rows, and a bayes estimate") {
  ExperimentConfig cfg;
  cfg.mode = Mode::mmdp;
  cfg.agents = 2;
  cfg.per_agent_states = 2;
  cfg.per_agent_actions = 2;
  cfg.horizon = 2;
  cfg.reward_feat_dim = 2;
  cfg.trans_feat_dim = 2;
  cfg.episodes = 30;
  cfg.sync = SyncSetting::parse("1.5");
  cfg.bayes_samples = 50;
  cfg.env_seed = 5;
  cfg.master_seed = 7;

  const auto artifacts = run_experiment(cfg);
  CHECK(artifacts.mmdp_regret.rows.size() == 30);
  CHECK(artifacts.comm.rows.size() == 30);
  CHECK(artifacts.stored_policies.size() == 30);
  CHECK(artifacts.bayes.samples == 50);
  CHECK(artifacts.replica_violations == 0);
  CHECK(artifacts.weight_norm_violations == 0);
  CHECK(artifacts.clip_violations == 0);

  // Max-over-states dominates fixed-start on every row.
  for (const auto& row : artifacts.mmdp_regret.rows)
    CHECK(row.max_state >= row.fixed_start - 1e-12);

  const auto report = json::parse(emit_report(cfg, artifacts));
  CHECK(report.at("bayes_regret").at("samples") == 50);
  CHECK(report.contains("cumulative_regret_over_T"));
}

// Command-line front end: validate environments, run experiments, compare
// baselines, sweep thresholds, and re-verify stored ledgers.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cooplsvi/runner.hpp"
#include "cooplsvi/serialize.hpp"
#include "cooplsvi/version.hpp"

namespace fs = std::filesystem;
using namespace cooplsvi;
using namespace cooplsvi::harness;
using nlohmann::json;

namespace {

struct Override {
  std::string flag;
  std::string path;  // dotted json path
  enum class Kind { integer, real, boolean, text } kind;
  std::string description;
};

const std::vector<Override> kOverrides = {
    {"--mode", "mode", Override::Kind::text,
     "parallel_homogeneous | parallel_small_dev | parallel_contextual | mmdp"},
    {"--num-states", "env.num_states", Override::Kind::integer, "states per MDP"},
    {"--num-actions", "env.num_actions", Override::Kind::integer, "actions per MDP"},
    {"--horizon", "env.horizon", Override::Kind::integer, "episode length H"},
    {"--feat-dim", "env.feat_dim", Override::Kind::integer, "feature dimension d"},
    {"--agents", "env.agents", Override::Kind::integer, "number of agents M"},
    {"--xi", "env.xi", Override::Kind::real, "small-deviation bound"},
    {"--context-dim", "env.context_dim", Override::Kind::integer, "context dimension k"},
    {"--hetero-rank", "env.hetero_rank", Override::Kind::integer, "coefficient of heterogeneity"},
    {"--per-agent-states", "env.per_agent_states", Override::Kind::integer, "MMDP states per agent"},
    {"--per-agent-actions", "env.per_agent_actions", Override::Kind::integer,
     "MMDP actions per agent"},
    {"--reward-feat-dim", "env.reward_feat_dim", Override::Kind::integer, "MMDP reward dim d1"},
    {"--trans-feat-dim", "env.trans_feat_dim", Override::Kind::integer, "MMDP transition dim d2"},
    {"--env-seed", "env.seed", Override::Kind::integer, "environment generator seed"},
    {"--lambda", "algo.lambda", Override::Kind::real, "ridge regularizer"},
    {"--c-beta", "algo.c_beta", Override::Kind::real, "confidence width constant"},
    {"--sync-threshold", "algo.sync_threshold", Override::Kind::text,
     "positive S, 'always' or 'never'"},
    {"--episodes", "algo.episodes", Override::Kind::integer, "episode count T"},
    {"--bonus-sqrt", "algo.bonus_sqrt", Override::Kind::boolean,
     "square-rooted MMDP bonus (sensitivity runs)"},
    {"--replica-check-every", "algo.replica_check_every", Override::Kind::integer,
     "MMDP replica verification period (0 disables)"},
    {"--bayes-samples", "algo.bayes_samples", Override::Kind::integer,
     "Monte-Carlo draws for the Bayes regret estimate"},
    {"--sampler-mode", "algo.sampler.mode", Override::Kind::text,
     "dirichlet | point_mass | finite_support"},
    {"--sampler-alpha", "algo.sampler.alpha", Override::Kind::real, "Dirichlet concentration"},
    {"--master-seed", "master_seed", Override::Kind::integer, "run seed"},
    {"--fixed-start", "fixed_start", Override::Kind::integer, "fixed start state (-1: random)"},
    {"--track-optimism", "track_optimism", Override::Kind::boolean, "record optimism frequency"},
    {"--output-dir", "output_dir", Override::Kind::text, "artifact directory"},
};

void set_path(json& j, const std::string& path, const json& value) {
  json* cursor = &j;
  std::istringstream is(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(is, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) cursor = &((*cursor)[parts[i]]);
  (*cursor)[parts.back()] = value;
}

// Registers the schema-mirroring flags on `app` and returns storage that the
// caller folds into the config json after parsing.
std::shared_ptr<std::vector<std::pair<const Override*, std::string>>> register_overrides(
    CLI::App* app) {
  auto captured = std::make_shared<std::vector<std::pair<const Override*, std::string>>>();
  for (const auto& o : kOverrides) {
    app->add_option_function<std::string>(
           o.flag, [captured, &o](const std::string& v) { captured->push_back({&o, v}); },
           o.description)
        ->type_name(o.kind == Override::Kind::text ? "TEXT" : "VALUE");
  }
  return captured;
}

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::pair<const Override*, std::string>>& captured) {
  json j;
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw std::runtime_error("cannot open config file: " + config_path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    j = json::parse(buffer.str());
  } else {
    j = json{{"mode", "parallel_homogeneous"}};
  }
  for (const auto& [o, text] : captured) {
    switch (o->kind) {
      case Override::Kind::integer: set_path(j, o->path, std::stoll(text)); break;
      case Override::Kind::real: set_path(j, o->path, std::stod(text)); break;
      case Override::Kind::boolean:
        set_path(j, o->path, text == "1" || text == "true" || text == "on");
        break;
      case Override::Kind::text:
        if (o->path == "algo.sync_threshold" && text != "always" && text != "never")
          set_path(j, o->path, std::stod(text));
        else
          set_path(j, o->path, text);
        break;
    }
  }
  return ExperimentConfig::from_json(j.dump());
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const std::string& fallback) {
  fs::path dir = cfg.output_dir.empty() ? fs::path(fallback) : fs::path(cfg.output_dir);
  if (dir.is_relative()) {
    if (const char* root = std::getenv("COOPLSVI_OUTPUT_ROOT")) dir = fs::path(root) / dir;
  }
  return dir;
}

int exit_status(const ExperimentConfig& cfg, const RunArtifacts& artifacts) {
  const json report = json::parse(emit_report(cfg, artifacts));
  const bool bound_ok = report.at("comm").at("bound").at("ok").get<bool>();
  const bool invariants_ok = artifacts.weight_norm_violations == 0 &&
                             artifacts.clip_violations == 0 &&
                             artifacts.replica_violations == 0;
  return bound_ok && invariants_ok ? 0 : 2;
}

int cmd_validate(const std::string& config_path, const std::string& spec_path,
                 const std::vector<std::pair<const Override*, std::string>>& captured) {
  env::ValidationReport report;
  if (!spec_path.empty()) {
    std::ifstream is(spec_path);
    if (!is) throw std::runtime_error("cannot open spec file: " + spec_path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    const json j = json::parse(buffer.str());
    const std::string type = j.at("type").get<std::string>();
    if (type == "linear_mdp")
      report = env::validate_spec(env::linear_mdp_from_json(buffer.str()));
    else if (type == "parallel_env_set")
      report = env::validate_set(env::parallel_set_from_json(buffer.str()));
    else if (type == "mmdp")
      report = env::validate_spec(env::mmdp_from_json(buffer.str()));
    else
      throw std::runtime_error("unknown spec type: " + type);
  } else {
    const ExperimentConfig cfg = load_config(config_path, captured);
    if (cfg.mode == Mode::mmdp)
      report = env::validate_spec(build_mmdp_env(cfg));
    else
      report = env::validate_set(build_parallel_env(cfg));
  }
  if (report.empty()) {
    std::cout << "valid: no invariant violations\n";
    return 0;
  }
  std::cout << env::format_report(report);
  std::cout << report.size() << " violation(s)\n";
  return 1;
}

int cmd_run(const std::string& config_path,
            const std::vector<std::pair<const Override*, std::string>>& captured) {
  const ExperimentConfig cfg = load_config(config_path, captured);
  const RunArtifacts artifacts = run_experiment(cfg);
  const fs::path dir = resolve_output_dir(cfg, "run_out");
  write_run_artifacts(dir.string(), cfg, artifacts);
  {
    // Reproducible environment bundle alongside the ledgers.
    std::ofstream os(dir / "env.json");
    if (cfg.mode == Mode::mmdp)
      os << env::to_json(build_mmdp_env(cfg), 2) << "\n";
    else
      os << env::to_json(build_parallel_env(cfg), 2) << "\n";
  }
  std::cout << emit_report(cfg, artifacts) << "\n";
  std::cout << "artifacts written to " << dir.string() << "\n";
  return exit_status(cfg, artifacts);
}

int cmd_baselines(const std::string& config_path,
                  const std::vector<std::pair<const Override*, std::string>>& captured) {
  const ExperimentConfig cfg = load_config(config_path, captured);
  const auto runs = run_baselines(cfg);
  const fs::path dir = resolve_output_dir(cfg, "baselines_out");
  fs::create_directories(dir);

  int status = 0;
  for (const auto& run : runs) {
    ExperimentConfig sub = cfg;
    if (run.name == "never") sub.sync = SyncSetting::parse("never");
    if (run.name == "always") sub.sync = SyncSetting::parse("always");
    write_run_artifacts((dir / run.name).string(), sub, run.artifacts);
    status = std::max(status, exit_status(sub, run.artifacts));
    std::cout << run.name << ": final group regret "
              << run.artifacts.final_group_regret() << ", sync episodes "
              << run.artifacts.comm.sync_episodes() << "\n";
  }

  // Aligned cumulative regret curves, one column per protocol setting.
  std::ofstream os(dir / "baselines.csv");
  os << "episode";
  for (const auto& run : runs) os << "," << run.name << "_cumulative_group_regret";
  os << "\n";
  os << std::setprecision(17);
  for (std::size_t t = 0; t < runs.front().artifacts.regret.rows.size(); ++t) {
    os << (t + 1);
    for (const auto& run : runs) os << "," << run.artifacts.regret.rows[t].group_cumulative;
    os << "\n";
  }
  std::cout << "curves written to " << (dir / "baselines.csv").string() << "\n";
  return status;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::pair<const Override*, std::string>>& captured,
              const std::string& grid_s, const std::string& grid_xi, int jobs) {
  const ExperimentConfig base = load_config(config_path, captured);
  if (grid_s.empty() == grid_xi.empty())
    throw std::runtime_error("sweep: provide exactly one of --grid-s or --grid-xi");

  std::vector<ExperimentConfig> configs;
  std::vector<std::string> names;
  std::istringstream is(grid_s.empty() ? grid_xi : grid_s);
  std::string item;
  while (std::getline(is, item, ',')) {
    ExperimentConfig cfg = base;
    if (!grid_s.empty()) {
      cfg.sync = SyncSetting::parse(item);
      names.push_back("S_" + item);
    } else {
      cfg.xi = std::stod(item);
      names.push_back("xi_" + item);
    }
    configs.push_back(cfg);
  }

  const fs::path dir = resolve_output_dir(base, "sweep_out");
  std::vector<int> statuses(configs.size(), 0);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
        const RunArtifacts artifacts = run_experiment(configs[i]);
        write_run_artifacts((dir / names[i]).string(), configs[i], artifacts);
        statuses[i] = exit_status(configs[i], artifacts);
      }
    });
  }
  for (auto& t : pool) t.join();

  int status = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << names[i] << ": written to " << (dir / names[i]).string()
              << (statuses[i] == 0 ? "" : " [CHECK FAILED]") << "\n";
    status = std::max(status, statuses[i]);
  }
  return status;
}

int cmd_verify(const std::string& run_dir) {
  std::ifstream cfg_is(fs::path(run_dir) / "config.json");
  if (!cfg_is) throw std::runtime_error("verify: missing config.json in " + run_dir);
  std::stringstream cfg_buf;
  cfg_buf << cfg_is.rdbuf();
  const ExperimentConfig cfg = ExperimentConfig::from_json(cfg_buf.str());

  std::ifstream comm_is(fs::path(run_dir) / "comm.csv");
  if (!comm_is) throw std::runtime_error("verify: missing comm.csv in " + run_dir);
  std::string line;
  std::getline(comm_is, line);  // header
  int sync_episodes = 0, episodes = 0;
  while (std::getline(comm_is, line)) {
    ++episodes;
    const auto first_comma = line.find(',');
    const auto second_comma = line.find(',', first_comma + 1);
    if (line.substr(first_comma + 1, second_comma - first_comma - 1) == "1") ++sync_episodes;
  }

  metrics::BoundReport bound;
  if (cfg.sync.kind == SyncSetting::Kind::never) {
    bound = {static_cast<double>(sync_episodes), 0.0, sync_episodes == 0, "never-sync: n = 0"};
  } else if (cfg.sync.kind == SyncSetting::Kind::always) {
    bound = {static_cast<double>(sync_episodes), static_cast<double>(episodes),
             sync_episodes <= episodes, "always-sync: n <= T"};
  } else if (cfg.mode == Mode::mmdp) {
    bound = metrics::mmdp_comm_bound(sync_episodes, cfg.reward_feat_dim + cfg.trans_feat_dim,
                                     cfg.horizon, episodes, cfg.sync.value, cfg.agents);
  } else {
    const int d_eff = cfg.mode == Mode::parallel_contextual ? cfg.feat_dim + cfg.context_dim
                                                            : cfg.feat_dim;
    bound = metrics::parallel_comm_bound(sync_episodes, d_eff, cfg.horizon, episodes,
                                         cfg.sync.value, cfg.agents);
  }
  std::cout << "rule: " << bound.rule << "\nmeasured: " << bound.measured
            << "\nbound: " << bound.bound << "\nverdict: " << (bound.ok ? "PASS" : "FAIL") << "\n";
  return bound.ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative least-squares value iteration simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, spec_path, run_dir, grid_s, grid_xi;
  int jobs = 1;

  auto* validate = app.add_subcommand("validate", "check environment invariants");
  validate->add_option("--config", config_path, "experiment config JSON");
  validate->add_option("--spec", spec_path, "serialized spec bundle JSON");
  auto validate_over = register_overrides(validate);

  auto* run = app.add_subcommand("run", "run one experiment end to end");
  run->add_option("--config", config_path, "experiment config JSON");
  auto run_over = register_overrides(run);

  auto* baselines =
      app.add_subcommand("baselines", "never-sync, always-sync and threshold on shared seeds");
  baselines->add_option("--config", config_path, "experiment config JSON");
  auto baselines_over = register_overrides(baselines);

  auto* sweep = app.add_subcommand("sweep", "grid over S or xi");
  sweep->add_option("--config", config_path, "experiment config JSON");
  sweep->add_option("--grid-s", grid_s, "comma-separated sync thresholds");
  sweep->add_option("--grid-xi", grid_xi, "comma-separated deviation bounds");
  sweep->add_option("--jobs", jobs, "parallel configurations");
  auto sweep_over = register_overrides(sweep);

  auto* verify = app.add_subcommand("verify", "re-run bound checks on stored ledgers");
  verify->add_option("--run-dir", run_dir, "directory written by 'run'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path, spec_path, *validate_over);
    if (run->parsed()) return cmd_run(config_path, *run_over);
    if (baselines->parsed()) return cmd_baselines(config_path, *baselines_over);
    if (sweep->parsed()) return cmd_sweep(config_path, *sweep_over, grid_s, grid_xi, jobs);
    if (verify->parsed()) return cmd_verify(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

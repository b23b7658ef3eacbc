#include "cooplsvi/config.hpp"

#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cooplsvi::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + what + " at " + path);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

template <typename T>
T get_or(const json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + "." + key, "wrong type");
  }
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::parallel_homogeneous: return "parallel_homogeneous";
    case Mode::parallel_small_dev: return "parallel_small_dev";
    case Mode::parallel_contextual: return "parallel_contextual";
    case Mode::mmdp: return "mmdp";
  }
  return "parallel_homogeneous";
}

Mode mode_from_name(const std::string& name) {
  if (name == "parallel_homogeneous") return Mode::parallel_homogeneous;
  if (name == "parallel_small_dev") return Mode::parallel_small_dev;
  if (name == "parallel_contextual") return Mode::parallel_contextual;
  if (name == "mmdp") return Mode::mmdp;
  throw std::invalid_argument("config: unknown mode '" + name + "' at .mode");
}

SyncSetting SyncSetting::parse(const std::string& text) {
  SyncSetting s;
  if (text == "always") {
    s.kind = Kind::always;
  } else if (text == "never") {
    s.kind = Kind::never;
  } else {
    s.kind = Kind::threshold;
    try {
      s.value = std::stod(text);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: sync_threshold must be a number, 'always' or 'never'");
    }
    if (!(s.value > 0.0))
      throw std::invalid_argument("config: sync_threshold must be positive");
  }
  return s;
}

std::string SyncSetting::to_string() const {
  switch (kind) {
    case Kind::always: return "always";
    case Kind::never: return "never";
    case Kind::threshold: break;
  }
  json v = value;
  return v.dump();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("", "expected an object");
  check_keys(j, "", {"mode", "env", "algo", "master_seed", "fixed_start", "track_optimism",
                     "output_dir"});

  ExperimentConfig cfg;
  if (!j.contains("mode")) fail(".mode", "missing required key");
  cfg.mode = mode_from_name(j.at("mode").get<std::string>());

  if (j.contains("env")) {
    const json& env = j.at("env");
    if (!env.is_object()) fail(".env", "expected an object");
    check_keys(env, ".env",
               {"num_states", "num_actions", "horizon", "feat_dim", "agents", "xi", "context_dim",
                "hetero_rank", "per_agent_states", "per_agent_actions", "reward_feat_dim",
                "trans_feat_dim", "seed"});
    cfg.num_states = get_or(env, ".env", "num_states", cfg.num_states);
    cfg.num_actions = get_or(env, ".env", "num_actions", cfg.num_actions);
    cfg.horizon = get_or(env, ".env", "horizon", cfg.horizon);
    cfg.feat_dim = get_or(env, ".env", "feat_dim", cfg.feat_dim);
    cfg.agents = get_or(env, ".env", "agents", cfg.agents);
    cfg.xi = get_or(env, ".env", "xi", cfg.xi);
    cfg.context_dim = get_or(env, ".env", "context_dim", cfg.context_dim);
    cfg.hetero_rank = get_or(env, ".env", "hetero_rank", cfg.hetero_rank);
    cfg.per_agent_states = get_or(env, ".env", "per_agent_states", cfg.per_agent_states);
    cfg.per_agent_actions = get_or(env, ".env", "per_agent_actions", cfg.per_agent_actions);
    cfg.reward_feat_dim = get_or(env, ".env", "reward_feat_dim", cfg.reward_feat_dim);
    cfg.trans_feat_dim = get_or(env, ".env", "trans_feat_dim", cfg.trans_feat_dim);
    cfg.env_seed = get_or(env, ".env", "seed", cfg.env_seed);
  }

  if (j.contains("algo")) {
    const json& algo = j.at("algo");
    if (!algo.is_object()) fail(".algo", "expected an object");
    check_keys(algo, ".algo",
               {"lambda", "c_beta", "sync_threshold", "episodes", "bonus_sqrt",
                "replica_check_every", "sampler", "bayes_samples"});
    cfg.lambda = get_or(algo, ".algo", "lambda", cfg.lambda);
    cfg.c_beta = get_or(algo, ".algo", "c_beta", cfg.c_beta);
    cfg.episodes = get_or(algo, ".algo", "episodes", cfg.episodes);
    cfg.bonus_sqrt = get_or(algo, ".algo", "bonus_sqrt", cfg.bonus_sqrt);
    cfg.replica_check_every = get_or(algo, ".algo", "replica_check_every", cfg.replica_check_every);
    cfg.bayes_samples = get_or(algo, ".algo", "bayes_samples", cfg.bayes_samples);
    if (algo.contains("sync_threshold")) {
      const json& s = algo.at("sync_threshold");
      if (s.is_string()) {
        cfg.sync = SyncSetting::parse(s.get<std::string>());
      } else if (s.is_number()) {
        cfg.sync = SyncSetting::parse(std::to_string(s.get<double>()));
        cfg.sync.value = s.get<double>();
      } else {
        fail(".algo.sync_threshold", "wrong type");
      }
    }
    if (algo.contains("sampler")) {
      const json& sampler = algo.at("sampler");
      if (!sampler.is_object()) fail(".algo.sampler", "expected an object");
      check_keys(sampler, ".algo.sampler", {"mode", "alpha", "upsilon", "atoms", "weights"});
      cfg.sampler.mode = get_or<std::string>(sampler, ".algo.sampler", "mode", cfg.sampler.mode);
      cfg.sampler.alpha = get_or(sampler, ".algo.sampler", "alpha", cfg.sampler.alpha);
      cfg.sampler.upsilon =
          get_or(sampler, ".algo.sampler", "upsilon", cfg.sampler.upsilon);
      cfg.sampler.atoms = get_or(sampler, ".algo.sampler", "atoms", cfg.sampler.atoms);
      cfg.sampler.weights = get_or(sampler, ".algo.sampler", "weights", cfg.sampler.weights);
      if (cfg.sampler.mode != "dirichlet" && cfg.sampler.mode != "point_mass" &&
          cfg.sampler.mode != "finite_support")
        fail(".algo.sampler.mode", "unknown sampler mode");
    }
  }

  cfg.master_seed = get_or(j, "", "master_seed", cfg.master_seed);
  cfg.fixed_start = get_or(j, "", "fixed_start", cfg.fixed_start);
  cfg.track_optimism = get_or(j, "", "track_optimism", cfg.track_optimism);
  cfg.output_dir = get_or(j, "", "output_dir", cfg.output_dir);

  if (cfg.episodes < 0) fail(".algo.episodes", "must be >= 0");
  if (cfg.agents < 1) fail(".env.agents", "must be >= 1");
  if (!(cfg.lambda > 0.0)) fail(".algo.lambda", "must be > 0");
  if (!(cfg.c_beta > 0.0)) fail(".algo.c_beta", "must be > 0");
  return cfg;
}

std::string ExperimentConfig::to_json(int indent) const {
  json j;
  j["mode"] = mode_name(mode);
  json env;
  env["num_states"] = num_states;
  env["num_actions"] = num_actions;
  env["horizon"] = horizon;
  env["feat_dim"] = feat_dim;
  env["agents"] = agents;
  env["xi"] = xi;
  env["context_dim"] = context_dim;
  env["hetero_rank"] = hetero_rank;
  env["per_agent_states"] = per_agent_states;
  env["per_agent_actions"] = per_agent_actions;
  env["reward_feat_dim"] = reward_feat_dim;
  env["trans_feat_dim"] = trans_feat_dim;
  env["seed"] = env_seed;
  j["env"] = std::move(env);
  json algo;
  algo["lambda"] = lambda;
  algo["c_beta"] = c_beta;
  algo["sync_threshold"] =
      sync.kind == SyncSetting::Kind::threshold ? json(sync.value) : json(sync.to_string());
  algo["episodes"] = episodes;
  algo["bonus_sqrt"] = bonus_sqrt;
  algo["replica_check_every"] = replica_check_every;
  algo["bayes_samples"] = bayes_samples;
  json sampler;
  sampler["mode"] = this->sampler.mode;
  sampler["alpha"] = this->sampler.alpha;
  if (!this->sampler.upsilon.empty()) sampler["upsilon"] = this->sampler.upsilon;
  if (!this->sampler.atoms.empty()) {
    sampler["atoms"] = this->sampler.atoms;
    sampler["weights"] = this->sampler.weights;
  }
  algo["sampler"] = std::move(sampler);
  j["algo"] = std::move(algo);
  j["master_seed"] = master_seed;
  j["fixed_start"] = fixed_start;
  j["track_optimism"] = track_optimism;
  j["output_dir"] = output_dir;
  return j.dump(indent);
}

}  // namespace cooplsvi::harness

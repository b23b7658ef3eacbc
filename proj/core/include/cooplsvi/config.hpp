#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cooplsvi::harness {

enum class Mode { parallel_homogeneous, parallel_small_dev, parallel_contextual, mmdp };

const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

/// Sync threshold knob: a positive real S or one of the sentinels.
struct SyncSetting {
  enum class Kind { threshold, always, never };
  Kind kind = Kind::threshold;
  double value = 1.0;

  static SyncSetting parse(const std::string& text);
  std::string to_string() const;
};

struct SamplerConfig {
  std::string mode = "dirichlet";  // dirichlet | point_mass | finite_support
  double alpha = 1.0;
  std::vector<double> upsilon;                 // point_mass
  std::vector<std::vector<double>> atoms;      // finite_support
  std::vector<double> weights;                 // finite_support
};

/// Resolved experiment configuration. JSON round-trips exactly; unknown keys
/// are rejected with their field path.
struct ExperimentConfig {
  Mode mode = Mode::parallel_homogeneous;

  // env
  int num_states = 5;
  int num_actions = 3;
  int horizon = 3;
  int feat_dim = 5;
  int agents = 2;
  double xi = 0.0;
  int context_dim = 0;
  int hetero_rank = 0;
  int per_agent_states = 2;
  int per_agent_actions = 2;
  int reward_feat_dim = 2;
  int trans_feat_dim = 2;
  std::uint64_t env_seed = 0;

  // algo
  double lambda = 1.0;
  double c_beta = 1.0;
  SyncSetting sync;
  int episodes = 100;
  bool bonus_sqrt = false;
  int replica_check_every = 1;  // 0 disables
  SamplerConfig sampler;
  int bayes_samples = 200;

  std::uint64_t master_seed = 0;
  int fixed_start = -1;  // -1: uniform from the run's stream
  bool track_optimism = true;
  std::string output_dir;

  static ExperimentConfig from_json(const std::string& text);
  std::string to_json(int indent = 2) const;
};

}  // namespace cooplsvi::harness

#include "cooplsvi/serialize.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cooplsvi::env {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw std::invalid_argument(std::string("spec json: bad row count for ") + what);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument(std::string("spec json: bad column count for ") + what);
    for (int c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw std::invalid_argument(std::string("spec json: bad length for ") + what);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = j.at(i).get<double>();
  return v;
}

void check_version(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::invalid_argument("spec json: unsupported schema_version");
}

json linear_mdp_to_jobj(const LinearMdpSpec& spec) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "linear_mdp";
  j["num_states"] = spec.num_states;
  j["num_actions"] = spec.num_actions;
  j["horizon"] = spec.horizon;
  j["feat_dim"] = spec.feat_dim;
  j["features"] = matrix_to_json(spec.features);
  json measures = json::array();
  json weights = json::array();
  for (int h = 0; h < spec.horizon; ++h) {
    measures.push_back(matrix_to_json(spec.measures[h]));
    weights.push_back(vector_to_json(spec.reward_weights[h]));
  }
  j["measures"] = std::move(measures);
  j["reward_weights"] = std::move(weights);
  return j;
}

LinearMdpSpec linear_mdp_from_jobj(const json& j) {
  check_version(j);
  if (j.at("type").get<std::string>() != "linear_mdp")
    throw std::invalid_argument("spec json: expected type linear_mdp");
  LinearMdpSpec spec;
  spec.num_states = j.at("num_states").get<int>();
  spec.num_actions = j.at("num_actions").get<int>();
  spec.horizon = j.at("horizon").get<int>();
  spec.feat_dim = j.at("feat_dim").get<int>();
  spec.features = matrix_from_json(j.at("features"), spec.num_states * spec.num_actions,
                                   spec.feat_dim, "features");
  spec.measures.resize(spec.horizon);
  spec.reward_weights.resize(spec.horizon);
  for (int h = 0; h < spec.horizon; ++h) {
    spec.measures[h] =
        matrix_from_json(j.at("measures").at(h), spec.feat_dim, spec.num_states, "measures");
    spec.reward_weights[h] =
        vector_from_json(j.at("reward_weights").at(h), spec.feat_dim, "reward_weights");
  }
  return spec;
}

const char* flavor_name(ParallelFlavor f) {
  switch (f) {
    case ParallelFlavor::homogeneous: return "homogeneous";
    case ParallelFlavor::small_deviation: return "small_deviation";
    case ParallelFlavor::contextual: return "contextual";
  }
  return "homogeneous";
}

ParallelFlavor flavor_from_name(const std::string& s) {
  if (s == "homogeneous") return ParallelFlavor::homogeneous;
  if (s == "small_deviation") return ParallelFlavor::small_deviation;
  if (s == "contextual") return ParallelFlavor::contextual;
  throw std::invalid_argument("spec json: unknown flavor " + s);
}

}  // namespace

std::string to_json(const LinearMdpSpec& spec, int indent) {
  return linear_mdp_to_jobj(spec).dump(indent);
}

LinearMdpSpec linear_mdp_from_json(const std::string& text) {
  return linear_mdp_from_jobj(json::parse(text));
}

std::string to_json(const ParallelEnvSet& set, int indent) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "parallel_env_set";
  j["flavor"] = flavor_name(set.flavor);
  j["agents"] = set.agents;
  j["xi"] = set.xi;
  j["base_feat_dim"] = set.base_feat_dim;
  j["context_dim"] = set.context_dim;
  j["contexts"] = matrix_to_json(set.contexts);
  json specs = json::array();
  for (const auto& spec : set.specs) specs.push_back(linear_mdp_to_jobj(spec));
  j["specs"] = std::move(specs);
  return j.dump(indent);
}

ParallelEnvSet parallel_set_from_json(const std::string& text) {
  const json j = json::parse(text);
  check_version(j);
  if (j.at("type").get<std::string>() != "parallel_env_set")
    throw std::invalid_argument("spec json: expected type parallel_env_set");
  ParallelEnvSet set;
  set.flavor = flavor_from_name(j.at("flavor").get<std::string>());
  set.agents = j.at("agents").get<int>();
  set.xi = j.at("xi").get<double>();
  set.base_feat_dim = j.at("base_feat_dim").get<int>();
  set.context_dim = j.at("context_dim").get<int>();
  // Context-free sets store an empty matrix.
  const int context_rows = static_cast<int>(j.at("contexts").size());
  if (context_rows != 0 && context_rows != set.agents)
    throw std::invalid_argument("spec json: bad row count for contexts");
  set.contexts = matrix_from_json(j.at("contexts"), context_rows, set.context_dim, "contexts");
  for (const auto& spec : j.at("specs")) set.specs.push_back(linear_mdp_from_jobj(spec));
  if (static_cast<int>(set.specs.size()) != set.agents)
    throw std::invalid_argument("spec json: agent count does not match specs");
  return set;
}

std::string to_json(const MmdpSpec& spec, int indent) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "mmdp";
  j["agents"] = spec.agents;
  j["per_agent_states"] = spec.per_agent_states;
  j["per_agent_actions"] = spec.per_agent_actions;
  j["horizon"] = spec.horizon;
  j["reward_feat_dim"] = spec.reward_feat_dim;
  j["trans_feat_dim"] = spec.trans_feat_dim;
  json rf = json::array();
  for (const auto& f : spec.reward_features) rf.push_back(matrix_to_json(f));
  j["reward_features"] = std::move(rf);
  j["common_features"] = matrix_to_json(spec.common_features);
  json measures = json::array();
  json weights = json::array();
  for (int h = 0; h < spec.horizon; ++h) {
    measures.push_back(matrix_to_json(spec.measures[h]));
    weights.push_back(vector_to_json(spec.reward_weights[h]));
  }
  j["measures"] = std::move(measures);
  j["reward_weights"] = std::move(weights);
  return j.dump(indent);
}

MmdpSpec mmdp_from_json(const std::string& text) {
  const json j = json::parse(text);
  check_version(j);
  if (j.at("type").get<std::string>() != "mmdp")
    throw std::invalid_argument("spec json: expected type mmdp");
  MmdpSpec spec;
  spec.agents = j.at("agents").get<int>();
  spec.per_agent_states = j.at("per_agent_states").get<std::vector<int>>();
  spec.per_agent_actions = j.at("per_agent_actions").get<std::vector<int>>();
  spec.horizon = j.at("horizon").get<int>();
  spec.reward_feat_dim = j.at("reward_feat_dim").get<int>();
  spec.trans_feat_dim = j.at("trans_feat_dim").get<int>();
  spec.joint_states = 1;
  spec.joint_actions = 1;
  for (int s : spec.per_agent_states) spec.joint_states *= s;
  for (int a : spec.per_agent_actions) spec.joint_actions *= a;
  const int rows = spec.joint_states * spec.joint_actions;
  for (const auto& f : j.at("reward_features"))
    spec.reward_features.push_back(matrix_from_json(f, rows, spec.reward_feat_dim, "reward_features"));
  if (static_cast<int>(spec.reward_features.size()) != spec.agents)
    throw std::invalid_argument("spec json: reward_features count mismatch");
  spec.common_features =
      matrix_from_json(j.at("common_features"), rows, spec.trans_feat_dim, "common_features");
  spec.measures.resize(spec.horizon);
  spec.reward_weights.resize(spec.horizon);
  for (int h = 0; h < spec.horizon; ++h) {
    spec.measures[h] = matrix_from_json(j.at("measures").at(h), spec.trans_feat_dim,
                                        spec.joint_states, "measures");
    spec.reward_weights[h] =
        vector_from_json(j.at("reward_weights").at(h), spec.reward_feat_dim, "reward_weights");
  }
  return spec;
}

}  // namespace cooplsvi::env

#pragma once

#include <string>

#include "cooplsvi/mdp.hpp"
#include "cooplsvi/mmdp_env.hpp"
#include "cooplsvi/parallel_env.hpp"

namespace cooplsvi::env {

/// Versioned JSON schema for experiment bundles. Field names match the type
/// definitions; doubles round-trip exactly.
inline constexpr int kSchemaVersion = 1;

std::string to_json(const LinearMdpSpec& spec, int indent = -1);
std::string to_json(const ParallelEnvSet& set, int indent = -1);
std::string to_json(const MmdpSpec& spec, int indent = -1);

LinearMdpSpec linear_mdp_from_json(const std::string& text);
ParallelEnvSet parallel_set_from_json(const std::string& text);
MmdpSpec mmdp_from_json(const std::string& text);

}  // namespace cooplsvi::env

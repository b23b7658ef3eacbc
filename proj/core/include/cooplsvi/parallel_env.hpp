#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cooplsvi/mdp.hpp"

namespace cooplsvi::env {

enum class ParallelFlavor { homogeneous, small_deviation, contextual };

/// M agents, each owning a linear MDP over shared state/action spaces.
/// `specs[m]` is the materialized per-agent MDP; for the contextual flavor
/// each agent's feature rows are [phi(x, a); kappa(m)], so specs[n].phi is
/// the combined feature used when estimating agent n's environment.
struct ParallelEnvSet {
  ParallelFlavor flavor = ParallelFlavor::homogeneous;
  int agents = 0;
  std::vector<LinearMdpSpec> specs;
  double xi = 0.0;           // small-deviation bound
  int base_feat_dim = 0;     // d; specs carry d + context_dim columns
  int context_dim = 0;       // k
  Eigen::MatrixXd contexts;  // M x k, already scaled into the feature space

  int feat_dim() const { return specs.empty() ? 0 : specs.front().feat_dim; }
  int num_states() const { return specs.empty() ? 0 : specs.front().num_states; }
  int num_actions() const { return specs.empty() ? 0 : specs.front().num_actions; }
  int horizon() const { return specs.empty() ? 0 : specs.front().horizon; }
};

ParallelEnvSet make_homogeneous_set(const LinearMdpSpec& base, int agents);

/// M specs whose transition rows are (1 - xi/2) base + (xi/2) agent-specific
/// mixtures and whose rewards differ by at most xi, all sharing the base
/// feature map.
ParallelEnvSet perturb_small_deviation(const LinearMdpSpec& base, double xi, int agents,
                                       std::uint64_t seed);

/// Heterogeneous set driven by agent contexts kappa(m) in R^k. The contexts
/// span exactly a `hetero_rank`-dimensional subspace once projected through
/// the context measures, i.e. rank(context Gram at every step) equals
/// hetero_rank.
ParallelEnvSet build_contextual_set(int num_states, int num_actions, int horizon, int base_feat_dim,
                                    int context_dim, int agents, int hetero_rank,
                                    std::uint64_t seed);

/// Flavor-specific invariants on top of per-spec validity.
ValidationReport validate_set(const ParallelEnvSet& set);

/// Largest total-variation distance between any two agents' transition rows.
double max_pairwise_tv(const ParallelEnvSet& set);

/// Largest absolute reward difference between any two agents.
double max_pairwise_reward_gap(const ParallelEnvSet& set);

/// Gram matrix of the agents' context measures at step h (M x M).
Eigen::MatrixXd context_gram(const ParallelEnvSet& set, int h);

/// Rank of `context_gram` with singular values below `cutoff` treated as 0.
int context_gram_rank(const ParallelEnvSet& set, int h, double cutoff = 1e-10);

}  // namespace cooplsvi::env

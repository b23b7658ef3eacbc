#include "cooplsvi/parallel_env.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace cooplsvi::env {

namespace {

// Fraction of the feature mass carried by the context block in contextual
// sets. Any value in (0, 1) keeps the combined rows on the simplex.
constexpr double kContextShare = 0.3;

}  // namespace

ParallelEnvSet make_homogeneous_set(const LinearMdpSpec& base, int agents) {
  if (agents < 1) throw std::invalid_argument("make_homogeneous_set: agents must be >= 1");
  ParallelEnvSet set;
  set.flavor = ParallelFlavor::homogeneous;
  set.agents = agents;
  set.base_feat_dim = base.feat_dim;
  set.specs.assign(agents, base);
  return set;
}

ParallelEnvSet perturb_small_deviation(const LinearMdpSpec& base, double xi, int agents,
                                       std::uint64_t seed) {
  if (!(xi >= 0.0 && xi < 1.0))
    throw std::invalid_argument("perturb_small_deviation: xi must lie in [0, 1)");
  if (agents < 1) throw std::invalid_argument("perturb_small_deviation: agents must be >= 1");

  ParallelEnvSet set;
  set.flavor = xi == 0.0 ? ParallelFlavor::homogeneous : ParallelFlavor::small_deviation;
  set.agents = agents;
  set.xi = xi;
  set.base_feat_dim = base.feat_dim;

  if (xi == 0.0) {
    set.specs.assign(agents, base);
    return set;
  }

  RngStream rng(seed, StreamKind::generator, 0xdeu, static_cast<std::uint64_t>(agents));
  set.specs.reserve(agents);
  for (int m = 0; m < agents; ++m) {
    LinearMdpSpec spec = base;
    for (int h = 0; h < base.horizon; ++h) {
      Eigen::MatrixXd own(base.feat_dim, base.num_states);
      for (int i = 0; i < base.feat_dim; ++i)
        own.row(i) = rng.next_dirichlet(base.num_states, 1.0).transpose();
      spec.measures[h] = (1.0 - 0.5 * xi) * base.measures[h] + 0.5 * xi * own;
      Eigen::VectorXd own_theta(base.feat_dim);
      for (int i = 0; i < base.feat_dim; ++i) own_theta[i] = rng.next_uniform();
      spec.reward_weights[h] = (1.0 - 0.5 * xi) * base.reward_weights[h] + 0.5 * xi * own_theta;
    }
    set.specs.push_back(std::move(spec));
  }
  return set;
}

ParallelEnvSet build_contextual_set(int num_states, int num_actions, int horizon, int base_feat_dim,
                                    int context_dim, int agents, int hetero_rank,
                                    std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1 || horizon < 1 || base_feat_dim < 1 || agents < 1)
    throw std::invalid_argument("build_contextual_set: all sizes must be >= 1");
  if (context_dim < 0) throw std::invalid_argument("build_contextual_set: context_dim must be >= 0");
  if (context_dim == 0 && hetero_rank != 0)
    throw std::invalid_argument("build_contextual_set: hetero_rank must be 0 without contexts");
  if (context_dim > 0 &&
      (hetero_rank < 1 || hetero_rank > std::min(context_dim, agents) || hetero_rank > num_states))
    throw std::invalid_argument("build_contextual_set: infeasible hetero_rank");
  if (base_feat_dim > num_states * num_actions)
    throw std::invalid_argument("build_contextual_set: base_feat_dim exceeds num_states * num_actions");

  ParallelEnvSet set;
  set.flavor = ParallelFlavor::contextual;
  set.agents = agents;
  set.base_feat_dim = base_feat_dim;
  set.context_dim = context_dim;

  RngStream rng(seed, StreamKind::generator, 0xc0u, static_cast<std::uint64_t>(agents),
                static_cast<std::uint64_t>(context_dim) << 8 | static_cast<std::uint64_t>(hetero_rank));

  const double gamma = context_dim == 0 ? 0.0 : kContextShare;
  const int d_total = base_feat_dim + context_dim;

  // Shared state-action features carrying mass (1 - gamma).
  Eigen::MatrixXd base_features(num_states * num_actions, base_feat_dim);
  for (int row = 0; row < base_features.rows(); ++row) {
    if (row < base_feat_dim) {
      base_features.row(row).setZero();
      base_features(row, row) = 1.0;
    } else {
      base_features.row(row) = rng.next_dirichlet(base_feat_dim, 1.0).transpose();
    }
  }
  base_features *= (1.0 - gamma);

  // Agent contexts carrying mass gamma. The first hetero_rank agents sit on
  // distinct simplex corners; later agents mix those corners, so the context
  // span has dimension exactly hetero_rank.
  set.contexts = Eigen::MatrixXd::Zero(agents, context_dim);
  for (int m = 0; m < agents; ++m) {
    if (context_dim == 0) break;
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(context_dim);
    if (m < hetero_rank) {
      weights[m] = 1.0;
    } else {
      Eigen::VectorXd mix = rng.next_dirichlet(hetero_rank, 1.0);
      for (int j = 0; j < hetero_rank; ++j) weights[j] = mix[j];
    }
    set.contexts.row(m) = (gamma * weights).transpose();
  }

  // Step kernels: d anchor distributions for the shared block plus k anchors
  // for the context block. Context anchors are pinned to distinct corners of
  // the state simplex (mixed with uniform) so the Gram rank is exact.
  std::vector<Eigen::MatrixXd> base_anchors(horizon), ctx_anchors(horizon);
  std::vector<Eigen::VectorXd> base_theta(horizon), ctx_alpha(horizon);
  for (int h = 0; h < horizon; ++h) {
    base_anchors[h].resize(base_feat_dim, num_states);
    for (int i = 0; i < base_feat_dim; ++i)
      base_anchors[h].row(i) = rng.next_dirichlet(num_states, 1.0).transpose();
    ctx_anchors[h].resize(context_dim, num_states);
    for (int i = 0; i < context_dim; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Constant(num_states, 0.5 / num_states);
      row[i % num_states] += 0.5;
      ctx_anchors[h].row(i) = row.transpose();
    }
    base_theta[h].resize(base_feat_dim);
    for (int i = 0; i < base_feat_dim; ++i) base_theta[h][i] = rng.next_uniform();
    ctx_alpha[h].resize(context_dim);
    for (int i = 0; i < context_dim; ++i) ctx_alpha[h][i] = rng.next_uniform();
  }

  set.specs.reserve(agents);
  for (int m = 0; m < agents; ++m) {
    LinearMdpSpec spec;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.horizon = horizon;
    spec.feat_dim = d_total;
    spec.features.resize(num_states * num_actions, d_total);
    spec.features.leftCols(base_feat_dim) = base_features;
    for (int row = 0; row < spec.features.rows(); ++row)
      spec.features.row(row).rightCols(context_dim) = set.contexts.row(m);
    spec.measures.resize(horizon);
    spec.reward_weights.resize(horizon);
    for (int h = 0; h < horizon; ++h) {
      spec.measures[h].resize(d_total, num_states);
      spec.measures[h].topRows(base_feat_dim) = base_anchors[h];
      spec.measures[h].bottomRows(context_dim) = ctx_anchors[h];
      spec.reward_weights[h].resize(d_total);
      spec.reward_weights[h].head(base_feat_dim) = base_theta[h];
      spec.reward_weights[h].tail(context_dim) = ctx_alpha[h];
    }
    set.specs.push_back(std::move(spec));
  }
  return set;
}

ValidationReport validate_set(const ParallelEnvSet& set) {
  ValidationReport report;
  for (int m = 0; m < set.agents; ++m) {
    ValidationReport per = validate_spec(set.specs[m]);
    report.insert(report.end(), per.begin(), per.end());
  }

  switch (set.flavor) {
    case ParallelFlavor::homogeneous: {
      const LinearMdpSpec& base = set.specs.front();
      for (int m = 1; m < set.agents; ++m) {
        const LinearMdpSpec& s = set.specs[m];
        bool equal = s.features == base.features;
        for (int h = 0; equal && h < base.horizon; ++h)
          equal = s.measures[h] == base.measures[h] && s.reward_weights[h] == base.reward_weights[h];
        if (!equal) report.push_back({"homogeneous-specs-differ", 0, m, -1, 0.0});
      }
      break;
    }
    case ParallelFlavor::small_deviation: {
      const double tv = max_pairwise_tv(set);
      if (tv > set.xi + 1e-9) report.push_back({"small-deviation-tv", 0, -1, -1, tv - set.xi});
      const double gap = max_pairwise_reward_gap(set);
      if (gap > set.xi + 1e-9) report.push_back({"small-deviation-reward", 0, -1, -1, gap - set.xi});
      break;
    }
    case ParallelFlavor::contextual: {
      for (int m = 0; m < set.agents; ++m) {
        const auto& f = set.specs[m].features;
        for (int row = 0; row < f.rows(); ++row) {
          if ((f.row(row).rightCols(set.context_dim) - set.contexts.row(m)).cwiseAbs().maxCoeff() >
              1e-12) {
            report.push_back({"contextual-feature-block", 0, m, row, 0.0});
            break;
          }
        }
      }
      break;
    }
  }
  return report;
}

double max_pairwise_tv(const ParallelEnvSet& set) {
  double worst = 0.0;
  const auto& first = set.specs.front();
  for (int m = 0; m < set.agents; ++m) {
    for (int n = m + 1; n < set.agents; ++n) {
      for (int h = 1; h <= first.horizon; ++h) {
        for (int x = 0; x < first.num_states; ++x) {
          for (int a = 0; a < first.num_actions; ++a) {
            const double tv = 0.5 * (set.specs[m].transition_row(x, a, h) -
                                     set.specs[n].transition_row(x, a, h))
                                        .cwiseAbs()
                                        .sum();
            worst = std::max(worst, tv);
          }
        }
      }
    }
  }
  return worst;
}

double max_pairwise_reward_gap(const ParallelEnvSet& set) {
  double worst = 0.0;
  const auto& first = set.specs.front();
  for (int m = 0; m < set.agents; ++m) {
    for (int n = m + 1; n < set.agents; ++n) {
      for (int h = 1; h <= first.horizon; ++h) {
        for (int x = 0; x < first.num_states; ++x) {
          for (int a = 0; a < first.num_actions; ++a) {
            worst = std::max(worst, std::abs(set.specs[m].reward(x, a, h) -
                                             set.specs[n].reward(x, a, h)));
          }
        }
      }
    }
  }
  return worst;
}

Eigen::MatrixXd context_gram(const ParallelEnvSet& set, int h) {
  if (set.flavor != ParallelFlavor::contextual)
    throw std::invalid_argument("context_gram: set has no contexts");
  if (h < 1 || h > set.horizon()) throw std::invalid_argument("context_gram: h out of range");
  // Rows of the per-agent context measure kappa(m)^T nu_h over states.
  Eigen::MatrixXd projected(set.agents, set.num_states());
  for (int m = 0; m < set.agents; ++m) {
    projected.row(m) =
        set.contexts.row(m) * set.specs[m].measures[h - 1].bottomRows(set.context_dim);
  }
  return projected * projected.transpose();
}

int context_gram_rank(const ParallelEnvSet& set, int h, double cutoff) {
  const Eigen::MatrixXd gram = context_gram(set, h);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > cutoff) ++rank;
  return rank;
}

}  // namespace cooplsvi::env

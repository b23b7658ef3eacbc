#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace cooplsvi {

/// Role of a random stream within a run. Folding the role into the key keeps
/// streams disjoint even when the remaining key fields collide.
enum class StreamKind : std::uint64_t {
  initial_state = 1,
  transition = 2,
  scalarization = 3,
  generator = 4,
  estimator = 5,
};

/// Counter-based random stream. Every (master seed, kind, a, b, c) tuple
/// names an independent stream whose draws do not depend on program order,
/// so simulations replay identically under any execution interleaving.
class RngStream {
 public:
  RngStream(std::uint64_t master, StreamKind kind, std::uint64_t a = 0,
            std::uint64_t b = 0, std::uint64_t c = 0);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1).
  double next_uniform();

  /// Uniform integer in [0, n).
  int next_index(int n);

  /// Standard normal via Box-Muller (two uniforms per draw).
  double next_gaussian();

  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double next_gamma(double shape);

  /// Point on the simplex: symmetric Dirichlet(alpha) in `dim` dimensions.
  Eigen::VectorXd next_dirichlet(int dim, double alpha);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 output function; the mixing primitive behind RngStream.
std::uint64_t mix64(std::uint64_t x);

}  // namespace cooplsvi

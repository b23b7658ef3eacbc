#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace cooplsvi::linalg {

/// Numeric tolerances used by the covariance machinery. Fixed constants;
/// exposed read-only so tests and callers agree on them.
namespace tol {
inline constexpr double kSymmetry = 1e-12;
inline constexpr double kEigenFloor = 1e-9;
inline constexpr double kLogDetCache = 1e-9;
inline constexpr double kMergePsd = 1e-9;
inline constexpr double kSolveResidual = 1e-8;
inline constexpr double kMonotonicitySlack = 1e-12;
inline constexpr double kPhiNormSlack = 1e-9;
}  // namespace tol

/// Ridge-regularized covariance lambda*I + sum phi phi^T with a cached
/// Cholesky factor and log-determinant. Rank-one updates refresh the factor
/// incrementally; batch merges refactor from scratch. Instances are
/// immutable; updates return new values.
class RegularizedCovariance {
 public:
  RegularizedCovariance(int dim, double ridge);

  int dim() const { return dim_; }
  double ridge() const { return ridge_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double log_det() const { return log_det_; }

  /// matrix += phi phi^T; log-det advanced by the matrix-determinant lemma.
  RegularizedCovariance rank_one_updated(const Eigen::VectorXd& phi) const;

  /// matrix += delta for symmetric PSD delta; factor and log-det rebuilt.
  RegularizedCovariance merged(const Eigen::MatrixXd& delta) const;

  /// sqrt(phi^T A^{-1} phi).
  double ellipsoid_norm(const Eigen::VectorXd& phi) const;

  /// A^{-1} rhs through the cached factor.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// Smallest eigenvalue of the stored matrix (dense symmetric solve).
  double min_eigenvalue() const;

 private:
  RegularizedCovariance() = default;

  int dim_ = 0;
  double ridge_ = 0.0;
  Eigen::MatrixXd matrix_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// Accumulates sum phi y^T as a dim x width matrix. Width 1 for scalar
/// regression targets, M for the multiagent vector targets.
class DesignAccumulator {
 public:
  DesignAccumulator(int dim, int width);

  int dim() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }

  void add(const Eigen::VectorXd& phi, double y);
  void add(const Eigen::VectorXd& phi, const Eigen::VectorXd& y);

 private:
  Eigen::MatrixXd values_;
};

RegularizedCovariance make_covariance(int dim, double ridge);
RegularizedCovariance rank_one_update(const RegularizedCovariance& cov, const Eigen::VectorXd& phi);
RegularizedCovariance batch_merge(const RegularizedCovariance& cov, const Eigen::MatrixXd& delta);
double ellipsoid_norm(const RegularizedCovariance& cov, const Eigen::VectorXd& phi);
Eigen::MatrixXd ridge_solve(const RegularizedCovariance& cov, const DesignAccumulator& acc);
double log_det_ratio(const RegularizedCovariance& numerator, const RegularizedCovariance& denominator);

/// Largest eigenvalue of a symmetric PSD matrix (the matrix 2-norm).
double spectral_norm(const Eigen::MatrixXd& sym);

}  // namespace cooplsvi::linalg

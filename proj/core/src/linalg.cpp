#include "cooplsvi/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace cooplsvi::linalg {

namespace {

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

RegularizedCovariance::RegularizedCovariance(int dim, double ridge) : dim_(dim), ridge_(ridge) {
  if (dim < 1) throw std::invalid_argument("RegularizedCovariance: dim must be >= 1");
  if (!(ridge > 0.0)) throw std::invalid_argument("RegularizedCovariance: ridge must be > 0");
  matrix_ = ridge * Eigen::MatrixXd::Identity(dim, dim);
  llt_.compute(matrix_);
  log_det_ = dim * std::log(ridge);
}

RegularizedCovariance RegularizedCovariance::rank_one_updated(const Eigen::VectorXd& phi) const {
  if (phi.size() != dim_)
    throw std::invalid_argument("rank_one_update: phi has length " + std::to_string(phi.size()) +
                                ", expected " + std::to_string(dim_));
  if (phi.norm() > 1.0 + tol::kPhiNormSlack)
    throw std::invalid_argument("rank_one_update: phi norm exceeds 1");
  RegularizedCovariance out(*this);
  const double quad = phi.dot(llt_.solve(phi));
  out.log_det_ += std::log1p(quad);
  out.matrix_.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
  out.matrix_ = out.matrix_.selfadjointView<Eigen::Lower>();
  out.llt_.rankUpdate(phi, 1.0);
  return out;
}

RegularizedCovariance RegularizedCovariance::merged(const Eigen::MatrixXd& delta) const {
  if (delta.rows() != dim_ || delta.cols() != dim_)
    throw std::invalid_argument("batch_merge: delta shape mismatch");
  if ((delta - delta.transpose()).cwiseAbs().maxCoeff() > tol::kMergePsd)
    throw std::invalid_argument("batch_merge: delta is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (delta + delta.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::kMergePsd)
    throw std::invalid_argument("batch_merge: delta is not positive semidefinite");

  RegularizedCovariance out(*this);
  out.matrix_ = matrix_ + sym;
  out.matrix_ = 0.5 * (out.matrix_ + out.matrix_.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> post(out.matrix_, Eigen::EigenvaluesOnly);
  if (post.eigenvalues().minCoeff() < ridge_ - tol::kEigenFloor)
    throw std::invalid_argument("batch_merge: merged matrix drops below the ridge floor");
  out.llt_.compute(out.matrix_);
  if (out.llt_.info() != Eigen::Success)
    throw std::invalid_argument("batch_merge: merged matrix is not positive definite");
  out.log_det_ = log_det_from_llt(out.llt_);
  return out;
}

double RegularizedCovariance::ellipsoid_norm(const Eigen::VectorXd& phi) const {
  if (phi.size() != dim_) throw std::invalid_argument("ellipsoid_norm: phi length mismatch");
  const double quad = phi.dot(llt_.solve(phi));
  return std::sqrt(std::max(quad, 0.0));
}

Eigen::MatrixXd RegularizedCovariance::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != dim_) throw std::invalid_argument("ridge_solve: rhs row count mismatch");
  return llt_.solve(rhs);
}

double RegularizedCovariance::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DesignAccumulator::DesignAccumulator(int dim, int width) {
  if (dim < 1 || width < 1)
    throw std::invalid_argument("DesignAccumulator: dim and width must be >= 1");
  values_ = Eigen::MatrixXd::Zero(dim, width);
}

void DesignAccumulator::add(const Eigen::VectorXd& phi, double y) {
  if (width() != 1) throw std::invalid_argument("DesignAccumulator::add: scalar target on width > 1");
  if (phi.size() != dim()) throw std::invalid_argument("DesignAccumulator::add: phi length mismatch");
  values_.col(0) += phi * y;
}

void DesignAccumulator::add(const Eigen::VectorXd& phi, const Eigen::VectorXd& y) {
  if (phi.size() != dim()) throw std::invalid_argument("DesignAccumulator::add: phi length mismatch");
  if (y.size() != width()) throw std::invalid_argument("DesignAccumulator::add: target width mismatch");
  values_ += phi * y.transpose();
}

RegularizedCovariance make_covariance(int dim, double ridge) {
  return RegularizedCovariance(dim, ridge);
}

RegularizedCovariance rank_one_update(const RegularizedCovariance& cov, const Eigen::VectorXd& phi) {
  return cov.rank_one_updated(phi);
}

RegularizedCovariance batch_merge(const RegularizedCovariance& cov, const Eigen::MatrixXd& delta) {
  return cov.merged(delta);
}

double ellipsoid_norm(const RegularizedCovariance& cov, const Eigen::VectorXd& phi) {
  return cov.ellipsoid_norm(phi);
}

Eigen::MatrixXd ridge_solve(const RegularizedCovariance& cov, const DesignAccumulator& acc) {
  if (acc.dim() != cov.dim()) throw std::invalid_argument("ridge_solve: accumulator dim mismatch");
  return cov.solve(acc.values());
}

double log_det_ratio(const RegularizedCovariance& numerator, const RegularizedCovariance& denominator) {
  if (numerator.dim() != denominator.dim())
    throw std::invalid_argument("log_det_ratio: dimension mismatch");
  if (numerator.ridge() != denominator.ridge())
    throw std::invalid_argument("log_det_ratio: ridge mismatch");
  return numerator.log_det() - denominator.log_det();
}

double spectral_norm(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace cooplsvi::linalg

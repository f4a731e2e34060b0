#include "wls.hpp"

#include <cmath>

#include "lossres/error.hpp"

namespace lossres::detail {

WeightedLeastSquares::WeightedLeastSquares(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                                           double singular_threshold)
    : sqrt_weights_(weights.cwiseMax(0.0).cwiseSqrt()) {
  if (!weights.allFinite()) throw Error(Errc::SingularDesign, "non-finite working weights");
  Eigen::MatrixXd scaled = sqrt_weights_.asDiagonal() * design;
  qr_.setThreshold(singular_threshold);
  qr_.compute(scaled);
  if (qr_.rank() < design.cols()) {
    throw Error(Errc::SingularDesign, "working design has rank " + std::to_string(qr_.rank()) + " < " +
                                          std::to_string(design.cols()));
  }
}

Eigen::VectorXd WeightedLeastSquares::solve(const Eigen::VectorXd& response) const {
  return qr_.solve(Eigen::VectorXd(sqrt_weights_.cwiseProduct(response)));
}

Eigen::VectorXd WeightedLeastSquares::leverages() const {
  const auto rows = qr_.rows();
  const auto cols = qr_.cols();
  Eigen::MatrixXd q = qr_.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return q.rowwise().squaredNorm();
}

Eigen::MatrixXd WeightedLeastSquares::inverse_information() const {
  const auto cols = qr_.cols();
  Eigen::MatrixXd r = qr_.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols, cols));
  // A'WA = P R'R P'  =>  (A'WA)^{-1} = P R^{-1} R^{-T} P'
  Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr_.colsPermutation();
  Eigen::MatrixXd out = perm * inner * perm.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace lossres::detail

#pragma once

#include <Eigen/Dense>

namespace lossres::detail {

/// Weighted least-squares solve of min ||W^{1/2}(z - A b)||^2 through a
/// column-pivoted QR of W^{1/2} A. Throws SingularDesign when the numerical
/// rank falls short of A.cols() at the given relative pivot threshold.
class WeightedLeastSquares {
 public:
  WeightedLeastSquares(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                       double singular_threshold);

  Eigen::VectorXd solve(const Eigen::VectorXd& response) const;

  /// Diagonal of the hat matrix W^{1/2} A (A'WA)^{-1} A' W^{1/2}.
  Eigen::VectorXd leverages() const;

  /// (A'WA)^{-1}.
  Eigen::MatrixXd inverse_information() const;

 private:
  Eigen::VectorXd sqrt_weights_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace lossres::detail

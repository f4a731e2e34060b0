#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lossres/glm.hpp"
#include "lossres/tweedie.hpp"

namespace lossres::detail {

struct IrlsResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd mean;
  std::vector<double> deviance_trace;
  double deviance = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Log-link IRLS with unit prior weights; the working weights mu^(2-p) are
/// free of phi. A step that raises the deviance or leaves the finite range is
/// halved back toward the previous iterate.
IrlsResult irls_log_link(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, FamilyPower p,
                         const FitControls& controls);

double total_quasi_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, FamilyPower p);

}  // namespace lossres::detail

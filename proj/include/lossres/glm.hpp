#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lossres/triangle.hpp"
#include "lossres/tweedie.hpp"

namespace lossres {

/// Iteration controls shared by the GLM and the mean step of the HGLM.
struct FitControls {
  /// Stop when |D_k - D_{k-1}| / (|D_k| + 0.1) falls below this.
  double tolerance = 1e-8;
  int max_iterations = 200;
  /// Relative pivot threshold of the rank-revealing QR.
  double singular_threshold = 1e-10;
  /// Warm start on the linear-predictor scale; overrides the data-based start.
  std::optional<Eigen::VectorXd> start;
};

/// Cross-classified log-link design: column 0 intercept, columns 1..n origin
/// indicators for i = 1..n, columns n+1..2n development indicators for
/// j = 1..n. Origin 0 and development 0 are the corner (zero effect).
struct Design {
  std::vector<CellIndex> observed_cells;
  Eigen::MatrixXd observed;
  std::vector<CellIndex> future_cells;
  Eigen::MatrixXd future;
};

Design build_design(const Triangle& t);

/// Row x_ij of the design for a horizon-n triangle.
Eigen::VectorXd design_row(CellIndex cell, int horizon);

struct GlmFit {
  FamilyPower power{1.0};
  int horizon = 0;
  /// (c, u_1..u_n, beta_1..beta_n) on the log scale.
  Eigen::VectorXd coefficients;
  /// Pearson estimate; NaN when the fit is saturated (no residual degrees of freedom).
  double dispersion = 0.0;
  /// mu_ij for every cell of the (n+1) x (n+1) square.
  Eigen::MatrixXd fitted;
  /// Pearson residuals in Triangle::observed_cells() order.
  std::vector<double> residuals;
  /// dispersion * (X'WX)^{-1}.
  Eigen::MatrixXd coef_covariance;
  double deviance = 0.0;
  double pearson_chi2 = 0.0;
  /// Deviance after each IRLS iteration.
  std::vector<double> deviance_trace;
  bool converged = false;
  int iterations = 0;

  int residual_dof() const noexcept;
};

/// IRLS fit of log mu_ij = c + u_i + beta_j with Var(Y_ij) = phi mu_ij^p.
///
/// Requires positive observed row and column sums (and y > 0 for p = 2,
/// y >= 0 for 1 < p < 2). Returns with converged = false when the iteration
/// cap is reached; throws SingularDesign or DomainError otherwise.
GlmFit fit_glm(const Triangle& t, FamilyPower p, const FitControls& controls = {});

/// Square roots of the per-origin (index 0..n) and total MSEP.
struct PredictionError {
  std::vector<double> per_origin;
  double total = 0.0;
};

/// Analytic prediction error of the GLM reserve: process variance
/// sum phi mu^p over future cells plus the delta-method estimation variance
/// eta' Cov(beta) eta with eta = sum mu_ij x_ij. Throws StaleFit for an
/// unconverged fit.
PredictionError glm_msep_analytic(const GlmFit& fit);

namespace detail {

/// Checks row/column sums and the family support for a log-link fit.
void check_fittable(const Triangle& t, FamilyPower p);

}  // namespace detail

}  // namespace lossres

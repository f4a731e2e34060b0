#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lossres/triangle.hpp"
#include "lossres/tweedie.hpp"

namespace lossres {

/// Hierarchical model: Y_ij | u_i ~ Tweedie(mu_ij, phi, p) with
/// log mu_ij = c + beta_j + v_i, v_i = log u_i, and u_i ~ Tweedie(1, phi_u, p_u).
/// The prior mean of u is fixed at 1; the intercept carries the level.
struct HglmSpec {
  FamilyPower power{1.0};
  FamilyPower random_power{2.0};
  std::optional<double> fixed_dispersion;
  std::optional<double> fixed_random_dispersion;
};

struct HglmControls {
  /// Mean step stops when no coefficient moves by more than this.
  double mean_tolerance = 1e-10;
  int max_mean_iterations = 100;
  /// Outer loop stops when both dispersions move by less than this, relatively.
  double dispersion_tolerance = 1e-6;
  int max_outer_iterations = 50;
  double singular_threshold = 1e-10;
  /// Warm start for the stacked (c, beta_1..beta_n, v_0..v_n).
  std::optional<Eigen::VectorXd> start;
};

/// Smallest random-effect dispersion the dispersion step may return.
inline constexpr double kRandomDispersionFloor = 1e-10;

struct HglmFit {
  FamilyPower power{1.0};
  FamilyPower random_power{2.0};
  int horizon = 0;
  /// (c, beta_1..beta_n) on the log scale.
  Eigen::VectorXd fixed;
  /// v_i = log u_i for i = 0..n.
  Eigen::VectorXd log_random;
  /// u_i for i = 0..n.
  Eigen::VectorXd random;
  double dispersion = 0.0;
  double random_dispersion = 0.0;
  /// mu_ij(u_i) for every cell of the (n+1) x (n+1) square.
  Eigen::MatrixXd fitted;
  /// Pearson residuals in Triangle::observed_cells() order.
  std::vector<double> residuals;
  /// Hat values of the augmented system: N data rows, then n + 1 prior rows.
  Eigen::VectorXd leverages;
  bool converged = false;
  /// Outer (dispersion) iterations.
  int iterations = 0;
  /// Set when phi_u hit kRandomDispersionFloor.
  bool full_shrinkage = false;

  /// Stacked (fixed, log_random), the layout accepted by HglmControls::start.
  Eigen::VectorXd stacked() const;
};

/// h-likelihood fit through the augmented GLM. The mean step solves the
/// stacked weighted least-squares system
///
///   [ X  Z ] [beta]   [ data working response        ]   weights mu^(2-p) / phi
///   [ 0  I ] [ v  ] ~ [ prior working response at 1  ]   weights u^(2-p_u) / phi_u
///
/// to convergence; the dispersion step refits phi and phi_u as intercept-only
/// Gamma GLMs on the leverage-adjusted deviance components d / (1 - q) with
/// prior weights (1 - q) / 2. The two steps alternate until the dispersions
/// settle. Returns with converged = false at the iteration cap.
HglmFit fit_hglm(const Triangle& t, const HglmSpec& spec, const HglmControls& controls = {});

struct RandomEffect {
  int origin = 0;
  double u = 1.0;
  double v = 0.0;
};

std::vector<RandomEffect> random_effect_estimates(const HglmFit& fit);

/// Runs a single extra mean step at the fit's dispersions and returns the
/// largest coefficient change. Exposed for convergence diagnostics.
double mean_step_residual(const Triangle& t, const HglmFit& fit, double singular_threshold = 1e-10);

}  // namespace lossres

#include "lossres/hglm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irls.hpp"
#include "lossres/error.hpp"
#include "lossres/glm.hpp"
#include "wls.hpp"

namespace lossres {

namespace {

constexpr double kMeanStagnation = 1e-6;

// Rows: N data cells, then n + 1 prior rows. Columns: c, beta_1..beta_n, v_0..v_n.
struct AugmentedSystem {
  int horizon = 0;
  Eigen::Index data_rows = 0;
  Eigen::Index fixed_cols = 0;
  Eigen::MatrixXd design;
  Eigen::VectorXd y;
};

AugmentedSystem build_augmented(const Triangle& t) {
  const int n = t.horizon();
  const auto cells = t.observed_cells();
  AugmentedSystem s;
  s.horizon = n;
  s.data_rows = static_cast<Eigen::Index>(cells.size());
  s.fixed_cols = n + 1;
  const Eigen::Index random_cols = n + 1;
  s.design = Eigen::MatrixXd::Zero(s.data_rows + random_cols, s.fixed_cols + random_cols);
  s.y.resize(s.data_rows);
  for (Eigen::Index k = 0; k < s.data_rows; ++k) {
    const auto c = cells[static_cast<std::size_t>(k)];
    s.design(k, 0) = 1.0;
    if (c.dev > 0) s.design(k, c.dev) = 1.0;
    s.design(k, s.fixed_cols + c.origin) = 1.0;
    s.y[k] = t.at(c);
  }
  for (Eigen::Index i = 0; i < random_cols; ++i) s.design(s.data_rows + i, s.fixed_cols + i) = 1.0;
  return s;
}

struct WorkingState {
  Eigen::VectorXd weights;
  Eigen::VectorXd response;
};

WorkingState working_state(const AugmentedSystem& s, const Eigen::VectorXd& theta, const HglmSpec& spec,
                           double phi, double phi_u) {
  const Eigen::Index q = s.horizon + 1;
  WorkingState w;
  w.weights.resize(s.design.rows());
  w.response.resize(s.design.rows());
  const Eigen::VectorXd eta = s.design.topRows(s.data_rows) * theta;
  for (Eigen::Index k = 0; k < s.data_rows; ++k) {
    const double mu = std::exp(eta[k]);
    w.weights[k] = std::pow(mu, 2.0 - spec.power.value()) / phi;
    w.response[k] = eta[k] + (s.y[k] - mu) / mu;
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    const double v = theta[s.fixed_cols + i];
    const double u = std::exp(v);
    w.weights[s.data_rows + i] = std::pow(u, 2.0 - spec.random_power.value()) / phi_u;
    w.response[s.data_rows + i] = v + (1.0 - u) / u;
  }
  return w;
}

struct MeanStep {
  Eigen::VectorXd theta;
  bool converged = false;
};

MeanStep solve_mean(const AugmentedSystem& s, Eigen::VectorXd theta, const HglmSpec& spec, double phi,
                    double phi_u, const HglmControls& controls) {
  MeanStep out;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < controls.max_mean_iterations; ++it) {
    const auto w = working_state(s, theta, spec, phi, phi_u);
    detail::WeightedLeastSquares wls(s.design, w.weights, controls.singular_threshold);
    Eigen::VectorXd next = wls.solve(w.response);
    if (!next.allFinite()) throw Error(Errc::SingularDesign, "augmented mean step diverged");
    const double change = (next - theta).cwiseAbs().maxCoeff();
    theta = std::move(next);
    // A nearly flat prior leaves the intercept and the v_i almost collinear;
    // the solve then jitters at round-off level and a small change that stops
    // shrinking means the fixed point is reached.
    if (change < controls.mean_tolerance || (change < kMeanStagnation && change >= previous)) {
      out.converged = true;
      break;
    }
    previous = change;
  }
  out.theta = std::move(theta);
  return out;
}

// Weighted-mean solution of the intercept-only Gamma GLM with response
// d / (1 - q) and prior weights (1 - q) / 2.
double gamma_intercept_dispersion(const Eigen::VectorXd& deviances, const Eigen::VectorXd& leverages) {
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < deviances.size(); ++k) {
    const double weight = 1.0 - leverages[k];
    if (weight <= 1e-12) continue;
    num += weight * (deviances[k] / weight);
    den += weight;
  }
  if (!(den > 0.0)) throw Error(Errc::DegenerateTriangle, "no residual degrees of freedom for the dispersion");
  return num / den;
}

}  // namespace

Eigen::VectorXd HglmFit::stacked() const {
  Eigen::VectorXd theta(fixed.size() + log_random.size());
  theta << fixed, log_random;
  return theta;
}

HglmFit fit_hglm(const Triangle& t, const HglmSpec& spec, const HglmControls& controls) {
  if (t.horizon() < 1) throw Error(Errc::DegenerateTriangle, "a 1x1 triangle has no future cells to predict");
  detail::check_fittable(t, spec.power);
  for (auto fixed : {spec.fixed_dispersion, spec.fixed_random_dispersion}) {
    if (fixed && !(*fixed > 0.0 && std::isfinite(*fixed))) {
      throw Error(Errc::DomainError, "fixed dispersions must be positive");
    }
  }

  const auto sys = build_augmented(t);
  const int n = sys.horizon;
  const Eigen::Index q = n + 1;
  const Eigen::Index N = sys.data_rows;

  // Start: development-only GLM, v = 0, moment dispersions.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(sys.design.cols());
  double phi = 0.0;
  double phi_u = 0.0;
  {
    const Eigen::MatrixXd x_fixed = sys.design.topLeftCorner(N, sys.fixed_cols);
    FitControls glm_controls;
    glm_controls.singular_threshold = controls.singular_threshold;
    if (controls.start) glm_controls.start = controls.start->head(sys.fixed_cols);
    auto base = detail::irls_log_link(x_fixed, sys.y, spec.power, glm_controls);
    if (controls.start) {
      theta = *controls.start;
    } else {
      theta.head(sys.fixed_cols) = base.coefficients;
    }

    double chi2 = 0.0;
    Eigen::VectorXd row_obs = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd row_fit = Eigen::VectorXd::Zero(q);
    const auto cells = t.observed_cells();
    for (Eigen::Index k = 0; k < N; ++k) {
      const double mu = base.mean[k];
      chi2 += std::pow(pearson_residual(sys.y[k], mu, spec.power), 2);
      row_obs[cells[static_cast<std::size_t>(k)].origin] += sys.y[k];
      row_fit[cells[static_cast<std::size_t>(k)].origin] += mu;
    }
    const auto dof = static_cast<double>(N - sys.fixed_cols);
    phi = chi2 / std::max(dof, 1.0);
    phi_u = (row_obs.array() / row_fit.array() - 1.0).square().mean();
    phi_u = std::max(phi_u, 1e-6);
  }
  if (spec.fixed_dispersion) phi = *spec.fixed_dispersion;
  if (spec.fixed_random_dispersion) phi_u = *spec.fixed_random_dispersion;

  HglmFit fit;
  fit.power = spec.power;
  fit.random_power = spec.random_power;
  fit.horizon = n;
  bool mean_converged = false;
  Eigen::VectorXd leverages;
  for (int outer = 1; outer <= controls.max_outer_iterations; ++outer) {
    auto step = solve_mean(sys, theta, spec, phi, phi_u, controls);
    theta = std::move(step.theta);
    mean_converged = step.converged;
    fit.iterations = outer;

    const auto w = working_state(sys, theta, spec, phi, phi_u);
    detail::WeightedLeastSquares wls(sys.design, w.weights, controls.singular_threshold);
    leverages = wls.leverages().cwiseMin(1.0);

    if (spec.fixed_dispersion && spec.fixed_random_dispersion) {
      fit.converged = mean_converged;
      break;
    }

    const Eigen::VectorXd eta = sys.design.topRows(N) * theta;
    Eigen::VectorXd dev_data(N);
    for (Eigen::Index k = 0; k < N; ++k) dev_data[k] = quasi_deviance(sys.y[k], std::exp(eta[k]), spec.power);
    Eigen::VectorXd dev_random(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      dev_random[i] = unit_deviance(std::exp(theta[sys.fixed_cols + i]), 1.0, spec.random_power);
    }

    double next_phi = phi;
    double next_phi_u = phi_u;
    if (!spec.fixed_dispersion) next_phi = gamma_intercept_dispersion(dev_data, leverages.head(N));
    if (!spec.fixed_random_dispersion) {
      next_phi_u = gamma_intercept_dispersion(dev_random, leverages.tail(q));
      fit.full_shrinkage = next_phi_u < kRandomDispersionFloor;
      next_phi_u = std::max(next_phi_u, kRandomDispersionFloor);
    }
    if (!(next_phi > 0.0) || !std::isfinite(next_phi)) {
      throw Error(Errc::DegenerateTriangle, "response dispersion collapsed to zero");
    }

    const double change = std::max(std::abs(next_phi - phi) / phi, std::abs(next_phi_u - phi_u) / phi_u);
    phi = next_phi;
    phi_u = next_phi_u;
    if (change < controls.dispersion_tolerance) {
      // Settle the mean at the final dispersions.
      auto last = solve_mean(sys, theta, spec, phi, phi_u, controls);
      theta = std::move(last.theta);
      const auto wl = working_state(sys, theta, spec, phi, phi_u);
      leverages = detail::WeightedLeastSquares(sys.design, wl.weights, controls.singular_threshold)
                      .leverages()
                      .cwiseMin(1.0);
      fit.converged = last.converged;
      break;
    }
  }

  fit.fixed = theta.head(sys.fixed_cols);
  fit.log_random = theta.tail(q);
  fit.random = fit.log_random.array().exp().matrix();
  fit.dispersion = phi;
  fit.random_dispersion = phi_u;
  fit.leverages = std::move(leverages);

  fit.fitted.resize(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double log_level = fit.fixed[0] + (j > 0 ? fit.fixed[j] : 0.0);
      fit.fitted(i, j) = std::exp(log_level) * fit.random[i];
    }
  }
  const auto cells = t.observed_cells();
  fit.residuals.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    fit.residuals[k] = pearson_residual(t.at(cells[k]), fit.fitted(cells[k].origin, cells[k].dev), spec.power);
  }
  return fit;
}

std::vector<RandomEffect> random_effect_estimates(const HglmFit& fit) {
  std::vector<RandomEffect> out;
  out.reserve(static_cast<std::size_t>(fit.log_random.size()));
  for (Eigen::Index i = 0; i < fit.log_random.size(); ++i) {
    out.push_back({static_cast<int>(i), std::exp(fit.log_random[i]), fit.log_random[i]});
  }
  return out;
}

double mean_step_residual(const Triangle& t, const HglmFit& fit, double singular_threshold) {
  const auto sys = build_augmented(t);
  const HglmSpec spec{fit.power, fit.random_power, {}, {}};
  const Eigen::VectorXd theta = fit.stacked();
  const auto w = working_state(sys, theta, spec, fit.dispersion, fit.random_dispersion);
  detail::WeightedLeastSquares wls(sys.design, w.weights, singular_threshold);
  return (wls.solve(w.response) - theta).cwiseAbs().maxCoeff();
}

}  // namespace lossres

#include "lossres/glm.hpp"

#include <cmath>
#include <limits>

#include "irls.hpp"
#include "lossres/error.hpp"
#include "wls.hpp"

namespace lossres {

namespace detail {

double total_quasi_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, FamilyPower p) {
  double d = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (!(mu[k] > 0.0) || !std::isfinite(mu[k])) return std::numeric_limits<double>::infinity();
    d += quasi_deviance(y[k], mu[k], p);
  }
  return d;
}

IrlsResult irls_log_link(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, FamilyPower p,
                         const FitControls& controls) {
  const double pw = p.value();
  IrlsResult out;
  Eigen::VectorXd eta;
  Eigen::VectorXd beta;
  bool have_beta = false;
  if (controls.start) {
    beta = *controls.start;
    eta = design * beta;
    have_beta = true;
  } else {
    const double floor = 1e-6 * y.cwiseAbs().mean();
    eta = y.cwiseMax(floor > 0.0 ? floor : 1e-300).array().log().matrix();
  }
  Eigen::VectorXd mu = eta.array().exp().matrix();
  double dev_old = total_quasi_deviance(y, mu, p);

  for (int it = 1; it <= controls.max_iterations; ++it) {
    Eigen::VectorXd w = mu.array().pow(2.0 - pw).matrix();
    Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    WeightedLeastSquares wls(design, w, controls.singular_threshold);
    Eigen::VectorXd beta_new = wls.solve(z);
    Eigen::VectorXd eta_new = design * beta_new;
    Eigen::VectorXd mu_new = eta_new.array().exp().matrix();
    double dev = total_quasi_deviance(y, mu_new, p);

    if (have_beta) {
      for (int half = 0; half < 40 && !(std::isfinite(dev) && dev <= dev_old + 1e-12 * std::abs(dev_old)); ++half) {
        beta_new = 0.5 * (beta_new + beta);
        eta_new = design * beta_new;
        mu_new = eta_new.array().exp().matrix();
        dev = total_quasi_deviance(y, mu_new, p);
      }
    }
    if (!std::isfinite(dev)) throw Error(Errc::SingularDesign, "IRLS left the finite range");

    out.iterations = it;
    out.deviance_trace.push_back(dev);
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    mu = std::move(mu_new);
    have_beta = true;
    const bool done = std::abs(dev - dev_old) / (std::abs(dev) + 0.1) < controls.tolerance;
    dev_old = dev;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.coefficients = std::move(beta);
  out.mean = std::move(mu);
  out.deviance = dev_old;
  return out;
}

void check_fittable(const Triangle& t, FamilyPower p) {
  if (t.kind() != TriangleKind::incremental) throw Error(Errc::KindMismatch, "fitting needs an incremental triangle");
  const int n = t.horizon();
  for (int k = 0; k <= n; ++k) {
    if (!(t.column_sum(k) > 0.0)) {
      throw Error(Errc::DomainError, "development column " + std::to_string(k) + " has non-positive sum");
    }
    if (!(t.row_sum(k) > 0.0)) {
      throw Error(Errc::DomainError, "origin row " + std::to_string(k) + " has non-positive sum");
    }
  }
  for (double y : t.observed_values()) {
    if (!std::isfinite(y)) throw Error(Errc::DomainError, "non-finite observation");
    if (p.is_gamma() && !(y > 0.0)) throw Error(Errc::DomainError, "Gamma response needs y > 0");
    if (p.is_compound() && y < 0.0) throw Error(Errc::DomainError, "compound Poisson response needs y >= 0");
  }
}

}  // namespace detail

Eigen::VectorXd design_row(CellIndex cell, int horizon) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * horizon + 1);
  x[0] = 1.0;
  if (cell.origin > 0) x[cell.origin] = 1.0;
  if (cell.dev > 0) x[horizon + cell.dev] = 1.0;
  return x;
}

Design build_design(const Triangle& t) {
  const int n = t.horizon();
  if (n == 0) throw Error(Errc::DegenerateTriangle, "a 1x1 triangle has no future cells to predict");
  Design d;
  d.observed_cells = t.observed_cells();
  d.future_cells = future_cells(n);
  d.observed.resize(static_cast<Eigen::Index>(d.observed_cells.size()), 2 * n + 1);
  d.future.resize(static_cast<Eigen::Index>(d.future_cells.size()), 2 * n + 1);
  for (std::size_t k = 0; k < d.observed_cells.size(); ++k)
    d.observed.row(static_cast<Eigen::Index>(k)) = design_row(d.observed_cells[k], n).transpose();
  for (std::size_t k = 0; k < d.future_cells.size(); ++k)
    d.future.row(static_cast<Eigen::Index>(k)) = design_row(d.future_cells[k], n).transpose();
  return d;
}

int GlmFit::residual_dof() const noexcept {
  const int observed = static_cast<int>(observed_cell_count(horizon));
  return observed - static_cast<int>(coefficients.size());
}

GlmFit fit_glm(const Triangle& t, FamilyPower p, const FitControls& controls) {
  const Design design = build_design(t);
  detail::check_fittable(t, p);
  const int n = t.horizon();
  const auto y = Eigen::Map<const Eigen::VectorXd>(t.observed_values().data(),
                                                   static_cast<Eigen::Index>(t.observed_count()));

  auto irls = detail::irls_log_link(design.observed, y, p, controls);

  GlmFit fit;
  fit.power = p;
  fit.horizon = n;
  fit.coefficients = irls.coefficients;
  fit.deviance = irls.deviance;
  fit.deviance_trace = std::move(irls.deviance_trace);
  fit.converged = irls.converged;
  fit.iterations = irls.iterations;

  fit.fitted.resize(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) fit.fitted(i, j) = std::exp(design_row({i, j}, n).dot(fit.coefficients));

  fit.residuals.resize(t.observed_count());
  double chi2 = 0.0;
  for (std::size_t k = 0; k < design.observed_cells.size(); ++k) {
    const auto c = design.observed_cells[k];
    const double r = pearson_residual(t.at(c), fit.fitted(c.origin, c.dev), p);
    fit.residuals[k] = r;
    chi2 += r * r;
  }
  fit.pearson_chi2 = chi2;
  const int dof = fit.residual_dof();
  fit.dispersion = dof > 0 ? chi2 / dof : std::numeric_limits<double>::quiet_NaN();

  Eigen::VectorXd mu = (design.observed * fit.coefficients).array().exp().matrix();
  detail::WeightedLeastSquares info(design.observed, mu.array().pow(2.0 - p.value()).matrix(),
                                    controls.singular_threshold);
  fit.coef_covariance = fit.dispersion * info.inverse_information();
  return fit;
}

PredictionError glm_msep_analytic(const GlmFit& fit) {
  if (!fit.converged) throw Error(Errc::StaleFit, "analytic MSEP needs a converged fit");
  const int n = fit.horizon;
  PredictionError out;
  out.per_origin.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (n == 0) return out;
  if (!std::isfinite(fit.dispersion)) {
    throw Error(Errc::DegenerateTriangle, "dispersion is not estimable on a saturated triangle");
  }

  const auto p = fit.power;
  Eigen::VectorXd eta_total = Eigen::VectorXd::Zero(fit.coefficients.size());
  double process_total = 0.0;
  for (int i = 1; i <= n; ++i) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(fit.coefficients.size());
    double process = 0.0;
    for (int j = n - i + 1; j <= n; ++j) {
      const double mu = fit.fitted(i, j);
      process += fit.dispersion * variance_function(mu, p);
      eta += mu * design_row({i, j}, n);
    }
    const double estimation = eta.dot(fit.coef_covariance * eta);
    out.per_origin[static_cast<std::size_t>(i)] = std::sqrt(process + estimation);
    eta_total += eta;
    process_total += process;
  }
  out.total = std::sqrt(process_total + eta_total.dot(fit.coef_covariance * eta_total));
  return out;
}

}  // namespace lossres

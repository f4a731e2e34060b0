#include "lossres/reserving.hpp"

#include <cmath>

#include "lossres/error.hpp"

namespace lossres {

namespace {

void require_converged(bool converged, bool allow_unconverged) {
  if (!converged && !allow_unconverged) throw Error(Errc::StaleFit, "fit did not converge");
}

void require_cell(CellIndex cell, int n) {
  if (cell.origin < 0 || cell.dev < 0 || cell.origin > n || cell.dev > n) {
    throw Error(Errc::DomainError, "cell outside the triangle");
  }
}

template <class Fit>
ReserveReport report_for(const Fit& fit, ModelKind kind, bool allow_unconverged) {
  require_converged(fit.converged, allow_unconverged);
  const int n = fit.horizon;
  ReserveReport r;
  r.kind = kind;
  r.per_origin.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 1; i <= n; ++i) {
    double s = 0.0;
    for (int j = n - i + 1; j <= n; ++j) s += predict_cell(fit, {i, j}, true);
    r.per_origin[static_cast<std::size_t>(i)] = s;
  }
  for (double x : r.per_origin) r.total += x;
  return r;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::glm ? "glm" : "hglm"; }

FittedModel fit_model(const Triangle& t, const ModelSpec& spec, const std::optional<Eigen::VectorXd>& start) {
  if (spec.kind == ModelKind::glm) {
    FitControls controls;
    controls.start = start;
    return fit_glm(t, spec.power, controls);
  }
  HglmControls controls;
  controls.start = start;
  return fit_hglm(t, spec.hglm_spec(), controls);
}

bool converged(const FittedModel& fit) noexcept {
  return std::visit([](const auto& f) { return f.converged; }, fit);
}

double dispersion(const FittedModel& fit) noexcept {
  return std::visit([](const auto& f) { return f.dispersion; }, fit);
}

const Eigen::MatrixXd& fitted_means(const FittedModel& fit) noexcept {
  return std::visit([](const auto& f) -> const Eigen::MatrixXd& { return f.fitted; }, fit);
}

const std::vector<double>& pearson_residuals(const FittedModel& fit) noexcept {
  return std::visit([](const auto& f) -> const std::vector<double>& { return f.residuals; }, fit);
}

int horizon(const FittedModel& fit) noexcept {
  return std::visit([](const auto& f) { return f.horizon; }, fit);
}

double predict_cell(const GlmFit& fit, CellIndex cell, bool allow_unconverged) {
  require_converged(fit.converged, allow_unconverged);
  require_cell(cell, fit.horizon);
  return std::exp(design_row(cell, fit.horizon).dot(fit.coefficients));
}

double predict_cell(const HglmFit& fit, CellIndex cell, bool allow_unconverged) {
  require_converged(fit.converged, allow_unconverged);
  require_cell(cell, fit.horizon);
  const double log_level = fit.fixed[0] + (cell.dev > 0 ? fit.fixed[cell.dev] : 0.0);
  return std::exp(log_level) * fit.random[cell.origin];
}

double predict_cell(const FittedModel& fit, CellIndex cell, bool allow_unconverged) {
  return std::visit([&](const auto& f) { return predict_cell(f, cell, allow_unconverged); }, fit);
}

ReserveReport reserve_report(const GlmFit& fit, bool allow_unconverged) {
  return report_for(fit, ModelKind::glm, allow_unconverged);
}

ReserveReport reserve_report(const HglmFit& fit, bool allow_unconverged) {
  return report_for(fit, ModelKind::hglm, allow_unconverged);
}

ReserveReport reserve_report(const FittedModel& fit, bool allow_unconverged) {
  return std::visit([&](const auto& f) { return reserve_report(f, allow_unconverged); }, fit);
}

ReserveReport empty_reserve_report(ModelKind kind) {
  ReserveReport r;
  r.kind = kind;
  r.per_origin = {0.0};
  return r;
}

}  // namespace lossres

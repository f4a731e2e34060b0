#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "lossres/glm.hpp"
#include "lossres/hglm.hpp"
#include "lossres/triangle.hpp"

namespace lossres {

enum class ModelKind { glm, hglm };

std::string_view to_string(ModelKind kind) noexcept;

/// Which model to fit and with which powers.
struct ModelSpec {
  ModelKind kind = ModelKind::glm;
  FamilyPower power{1.0};
  FamilyPower random_power{2.0};
  std::optional<double> fixed_dispersion;
  std::optional<double> fixed_random_dispersion;

  HglmSpec hglm_spec() const { return {power, random_power, fixed_dispersion, fixed_random_dispersion}; }
};

using FittedModel = std::variant<GlmFit, HglmFit>;

/// Dispatches to fit_glm or fit_hglm. `start` warm-starts the linear
/// predictor coefficients in the layout of the chosen model.
FittedModel fit_model(const Triangle& t, const ModelSpec& spec,
                      const std::optional<Eigen::VectorXd>& start = std::nullopt);

bool converged(const FittedModel& fit) noexcept;
double dispersion(const FittedModel& fit) noexcept;
const Eigen::MatrixXd& fitted_means(const FittedModel& fit) noexcept;
const std::vector<double>& pearson_residuals(const FittedModel& fit) noexcept;
int horizon(const FittedModel& fit) noexcept;

/// exp(c + u_i + beta_j) for the GLM, exp(c + beta_j) u_i for the HGLM.
/// Throws StaleFit for an unconverged fit unless `allow_unconverged`.
double predict_cell(const GlmFit& fit, CellIndex cell, bool allow_unconverged = false);
double predict_cell(const HglmFit& fit, CellIndex cell, bool allow_unconverged = false);
double predict_cell(const FittedModel& fit, CellIndex cell, bool allow_unconverged = false);

struct ReserveReport {
  ModelKind kind = ModelKind::glm;
  /// Index i holds the reserve of origin year i; entry 0 is always 0.
  std::vector<double> per_origin;
  /// Sum of per_origin in index order.
  double total = 0.0;
};

/// Sums predict_cell over the future cells of each origin row.
ReserveReport reserve_report(const GlmFit& fit, bool allow_unconverged = false);
ReserveReport reserve_report(const HglmFit& fit, bool allow_unconverged = false);
ReserveReport reserve_report(const FittedModel& fit, bool allow_unconverged = false);

/// Reserve of an empty (n = 0) triangle: one zero row, zero total.
ReserveReport empty_reserve_report(ModelKind kind);

}  // namespace lossres

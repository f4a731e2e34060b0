#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lossres/reserving.hpp"
#include "lossres/triangle.hpp"

namespace lossres {

/// Dispersion used for the process draws of the future cells.
enum class ProcessDispersion {
  /// phi estimated on the replicate's pseudo-data.
  refit,
  /// phi of the base fit.
  base,
};

struct BootstrapConfig {
  int replicates = 1000;
  std::uint64_t seed = 0;
  ModelSpec model;
  /// Leave residuals that are zero by construction (leverage-one cells) out of the pool.
  bool drop_zero_residuals = false;
  /// Inflate residuals by sqrt(N / (N - k)) before resampling.
  bool scale_residuals = false;
  /// Refit failures tolerated per replicate before it is given up.
  int max_redraws = 100;
  ProcessDispersion process_dispersion = ProcessDispersion::base;
  /// OpenMP threads for bootstrap_run; ignored by bootstrap_run_serial.
  int threads = 1;
};

/// One successful replicate. Vectors are indexed by origin year 0..n.
struct ReplicateRecord {
  std::vector<double> predicted;
  std::vector<double> simulated;
  double predicted_total = 0.0;
  double simulated_total = 0.0;
  /// phi of the refit, used for the process draws.
  double dispersion = 0.0;
};

struct BootstrapResult {
  BootstrapConfig config;
  int horizon = 0;
  ReserveReport base_reserve;
  double base_dispersion = 0.0;
  std::optional<double> base_random_dispersion;
  /// Ordered by replicate index; shorter than config.replicates only when degraded.
  std::vector<ReplicateRecord> replicates;
  /// Refit attempts discarded across all replicates.
  int failures = 0;
  /// Some replicate exhausted its redraw budget (TooManyFailures).
  bool degraded = false;
};

/// Resampled observations y* = r* sqrt(mu^p) + mu over the observed cells,
/// in Triangle::observed_cells() order.
std::vector<double> pseudo_observations(const Triangle& t, const Eigen::MatrixXd& fitted,
                                        std::span<const double> residuals, FamilyPower p);

/// Residual-resampling bootstrap of the reserve prediction error. Each
/// replicate b
///   1. resamples N Pearson residuals of the base fit with replacement,
///   2. rebuilds pseudo-observations from the base fitted means,
///   3. refits the configured model to them,
///   4. predicts the future cells from the refit,
///   5. draws the future cells from Tweedie(base mean, phi, p), with phi
///      from the base fit or the refit per config.process_dispersion,
/// and records per-origin and total sums of steps 4 and 5. A replicate whose
/// refit fails is redrawn from the same stream. Replicate b uses Philox
/// stream (seed, b), so the result does not depend on the thread count.
///
/// Runs replicates on `config.threads` OpenMP threads. Throws BaseFitError
/// when the base model cannot be fitted.
BootstrapResult bootstrap_run(const Triangle& t, const BootstrapConfig& config);

/// Single-threaded reference for bootstrap_run; produces identical output.
BootstrapResult bootstrap_run_serial(const Triangle& t, const BootstrapConfig& config);

/// Per-origin (index 0..n) and total error statistics.
struct ErrorSummary {
  std::vector<double> per_origin;
  double total = 0.0;
};

/// sqrt(mean_b (sum yhat*b - sum y*b)^2) per origin and in total.
ErrorSummary rmsep(const BootstrapResult& result);

struct QuantileTable {
  std::vector<double> probs;
  /// per_origin[i][k] is the probs[k] quantile for origin i.
  std::vector<std::vector<double>> per_origin;
  std::vector<double> total;
};

/// Empirical quantiles of |sum yhat*b - sum y*b|, linear interpolation between
/// order statistics at position (B - 1) p. Probabilities must lie in (0, 1)
/// and be ascending.
QuantileTable error_quantiles(const BootstrapResult& result, std::span<const double> probs);

/// Linear-interpolation quantile of an ascending sample.
double sorted_quantile(std::span<const double> ascending, double prob);

/// `b,origin,predicted_sum,simulated_sum`; origin is 1..n or `total`.
void write_replicates_csv(std::ostream& out, const BootstrapResult& result);

}  // namespace lossres

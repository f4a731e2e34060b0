#include "lossres/bootstrap.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <string_view>

#include "lossres/error.hpp"
#include "lossres/philox.hpp"
#include "lossres/tweedie.hpp"

namespace lossres {

namespace {

// Everything a replicate reads; shared read-only across threads.
struct BaseModel {
  Triangle triangle;
  FittedModel fit;
  Eigen::VectorXd start;
  std::vector<double> pool;
  std::vector<CellIndex> future;
};

BaseModel prepare(const Triangle& t, const BootstrapConfig& cfg) {
  if (cfg.replicates < 1) throw Error(Errc::InvalidArgument, "bootstrap needs at least one replicate");
  if (cfg.max_redraws < 0) throw Error(Errc::InvalidArgument, "max_redraws must be >= 0");
  if (cfg.threads < 1) throw Error(Errc::InvalidArgument, "threads must be >= 1");

  std::optional<FittedModel> fit;
  try {
    fit = fit_model(t, cfg.model);
  } catch (const Error& e) {
    throw Error(Errc::BaseFitError, e.what());
  }
  if (!converged(*fit)) throw Error(Errc::BaseFitError, "base fit did not converge");
  if (!(dispersion(*fit) > 0.0) || !std::isfinite(dispersion(*fit))) {
    throw Error(Errc::BaseFitError, "base fit has no usable dispersion estimate");
  }

  BaseModel base{t, *fit, {}, {}, future_cells(t)};
  base.start = std::visit(
      [](const auto& f) -> Eigen::VectorXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GlmFit>) {
          return f.coefficients;
        } else {
          return f.stacked();
        }
      },
      base.fit);

  const auto& residuals = pearson_residuals(base.fit);
  double largest = 0.0;
  for (double r : residuals) largest = std::max(largest, std::abs(r));
  for (double r : residuals) {
    if (cfg.drop_zero_residuals && std::abs(r) <= 1e-9 * largest) continue;
    base.pool.push_back(r);
  }
  if (cfg.scale_residuals) {
    const auto n_obs = static_cast<double>(t.observed_count());
    const double params = std::visit(
        [](const auto& f) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GlmFit>) {
            return static_cast<double>(f.coefficients.size());
          } else {
            return f.leverages.head(static_cast<Eigen::Index>(f.residuals.size())).sum();
          }
        },
        base.fit);
    const double factor = std::sqrt(n_obs / (n_obs - params));
    for (double& r : base.pool) r *= factor;
  }
  if (base.pool.empty()) throw Error(Errc::BaseFitError, "empty residual pool");
  return base;
}

struct ReplicateOutcome {
  std::optional<ReplicateRecord> record;
  int failures = 0;
};

ReplicateOutcome run_replicate(const BaseModel& base, const BootstrapConfig& cfg, std::uint64_t b) {
  Philox4x32 rng(cfg.seed, b);
  const auto p = cfg.model.power;
  const auto& mu = fitted_means(base.fit);
  const int n = base.triangle.horizon();
  std::uniform_int_distribution<std::size_t> pick(0, base.pool.size() - 1);
  std::vector<double> drawn(base.triangle.observed_count());

  ReplicateOutcome out;
  for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
    for (double& r : drawn) r = base.pool[pick(rng)];
    const Triangle pseudo = base.triangle.with_values(pseudo_observations(base.triangle, mu, drawn, p));

    std::optional<FittedModel> refit;
    try {
      refit = fit_model(pseudo, cfg.model, base.start);
    } catch (const Error& e) {
      if (e.code() != Errc::SingularDesign && e.code() != Errc::DomainError &&
          e.code() != Errc::DegenerateTriangle) {
        throw;
      }
    }
    const double phi = refit ? dispersion(*refit) : 0.0;
    if (!refit || !converged(*refit) || !(phi > 0.0) || !std::isfinite(phi)) {
      ++out.failures;
      continue;
    }

    ReplicateRecord rec;
    rec.dispersion = phi;
    const double process_phi = cfg.process_dispersion == ProcessDispersion::refit ? phi : dispersion(base.fit);
    rec.predicted.assign(static_cast<std::size_t>(n) + 1, 0.0);
    rec.simulated.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (const auto c : base.future) {
      const auto i = static_cast<std::size_t>(c.origin);
      rec.predicted[i] += predict_cell(*refit, c);
      rec.simulated[i] += sample(mu(c.origin, c.dev), process_phi, p, rng);
    }
    for (std::size_t i = 0; i < rec.predicted.size(); ++i) {
      rec.predicted_total += rec.predicted[i];
      rec.simulated_total += rec.simulated[i];
    }
    out.record = std::move(rec);
    return out;
  }
  return out;
}

BootstrapResult assemble(const BaseModel& base, const BootstrapConfig& cfg, std::vector<ReplicateOutcome>& outcomes) {
  BootstrapResult res;
  res.config = cfg;
  res.horizon = base.triangle.horizon();
  res.base_reserve = reserve_report(base.fit);
  res.base_dispersion = dispersion(base.fit);
  if (const auto* h = std::get_if<HglmFit>(&base.fit)) res.base_random_dispersion = h->random_dispersion;
  res.replicates.reserve(outcomes.size());
  for (auto& o : outcomes) {
    res.failures += o.failures;
    if (o.record) {
      res.replicates.push_back(std::move(*o.record));
    } else {
      res.degraded = true;
    }
  }
  return res;
}

void append_number(std::ostream& out, double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out << std::string_view(buf, static_cast<std::size_t>(end - buf));
}

}  // namespace

std::vector<double> pseudo_observations(const Triangle& t, const Eigen::MatrixXd& fitted,
                                        std::span<const double> residuals, FamilyPower p) {
  const auto cells = t.observed_cells();
  if (residuals.size() != cells.size()) throw Error(Errc::InvalidArgument, "one residual per observed cell");
  std::vector<double> y(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    y[k] = from_pearson_residual(residuals[k], fitted(cells[k].origin, cells[k].dev), p);
  }
  return y;
}

BootstrapResult bootstrap_run_serial(const Triangle& t, const BootstrapConfig& config) {
  const auto base = prepare(t, config);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
  for (int b = 0; b < config.replicates; ++b) {
    outcomes[static_cast<std::size_t>(b)] = run_replicate(base, config, static_cast<std::uint64_t>(b));
  }
  return assemble(base, config, outcomes);
}

BootstrapResult bootstrap_run(const Triangle& t, const BootstrapConfig& config) {
  const auto base = prepare(t, config);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic) num_threads(config.threads)
  for (int b = 0; b < config.replicates; ++b) {
    try {
      outcomes[static_cast<std::size_t>(b)] = run_replicate(base, config, static_cast<std::uint64_t>(b));
    } catch (...) {
#pragma omp critical(lossres_bootstrap_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return assemble(base, config, outcomes);
}

double sorted_quantile(std::span<const double> ascending, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw Error(Errc::DomainError, "quantile probability must lie in (0, 1)");
  if (ascending.empty()) throw Error(Errc::InvalidArgument, "quantile of an empty sample");
  const double h = static_cast<double>(ascending.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, ascending.size() - 1);
  return ascending[lo] + (h - static_cast<double>(lo)) * (ascending[hi] - ascending[lo]);
}

ErrorSummary rmsep(const BootstrapResult& result) {
  const auto levels = static_cast<std::size_t>(result.horizon) + 1;
  ErrorSummary out;
  out.per_origin.assign(levels, 0.0);
  const auto B = static_cast<double>(result.replicates.size());
  if (result.replicates.empty()) return out;
  double total = 0.0;
  for (const auto& rec : result.replicates) {
    for (std::size_t i = 0; i < levels; ++i) {
      const double e = rec.predicted[i] - rec.simulated[i];
      out.per_origin[i] += e * e;
    }
    const double e = rec.predicted_total - rec.simulated_total;
    total += e * e;
  }
  for (auto& s : out.per_origin) s = std::sqrt(s / B);
  out.total = std::sqrt(total / B);
  return out;
}

QuantileTable error_quantiles(const BootstrapResult& result, std::span<const double> probs) {
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!(probs[k] > 0.0 && probs[k] < 1.0)) {
      throw Error(Errc::DomainError, "quantile probability must lie in (0, 1)");
    }
    if (k > 0 && probs[k] < probs[k - 1]) throw Error(Errc::InvalidArgument, "quantile probabilities must ascend");
  }
  const auto levels = static_cast<std::size_t>(result.horizon) + 1;
  QuantileTable out;
  out.probs.assign(probs.begin(), probs.end());
  std::vector<double> errs(result.replicates.size());
  auto table = [&](auto&& error_of) {
    for (std::size_t b = 0; b < errs.size(); ++b) errs[b] = std::abs(error_of(result.replicates[b]));
    std::sort(errs.begin(), errs.end());
    std::vector<double> row;
    row.reserve(probs.size());
    for (double pr : probs) row.push_back(sorted_quantile(errs, pr));
    return row;
  };
  for (std::size_t i = 0; i < levels; ++i) {
    out.per_origin.push_back(table([i](const ReplicateRecord& r) { return r.predicted[i] - r.simulated[i]; }));
  }
  out.total = table([](const ReplicateRecord& r) { return r.predicted_total - r.simulated_total; });
  return out;
}

void write_replicates_csv(std::ostream& out, const BootstrapResult& result) {
  out << "b,origin,predicted_sum,simulated_sum\n";
  for (std::size_t b = 0; b < result.replicates.size(); ++b) {
    const auto& rec = result.replicates[b];
    for (int i = 1; i <= result.horizon; ++i) {
      out << b + 1 << ',' << i << ',';
      append_number(out, rec.predicted[static_cast<std::size_t>(i)]);
      out << ',';
      append_number(out, rec.simulated[static_cast<std::size_t>(i)]);
      out << '\n';
    }
    out << b + 1 << ",total,";
    append_number(out, rec.predicted_total);
    out << ',';
    append_number(out, rec.simulated_total);
    out << '\n';
  }
}

}  // namespace lossres

#include "lossres/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lossres/bootstrap.hpp"
#include "lossres/error.hpp"
#include "lossres/glm.hpp"
#include "lossres/hglm.hpp"
#include "lossres/reserving.hpp"
#include "lossres/triangle.hpp"

namespace lossres::cli {

namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string input;
  std::string model = "glm";
  double p = 1.0;
  double p_random = 2.0;
  std::optional<double> fix_phi;
  std::optional<double> fix_phi_u;
  std::string format = "json";
  std::string output;
  // bootstrap
  int boot = 1000;
  std::optional<std::uint64_t> seed;
  std::vector<double> quantiles{0.5, 0.75, 0.9, 0.95};
  int threads = 1;
  int max_redraws = 100;
  bool drop_zero_residuals = false;
  bool scale_residuals = false;
  std::string process_phi = "base";
  std::string dump_replicates;
  std::string plot_data;
};

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json manifest(const Options& o, const std::string& command) {
  json m;
  m["command"] = command;
  m["input"] = o.input;
  m["model"] = o.model;
  m["p"] = o.p;
  m["p_random"] = o.p_random;
  m["fix_phi"] = optional_number(o.fix_phi);
  m["fix_phi_u"] = optional_number(o.fix_phi_u);
  m["format"] = o.format;
  if (command == "bootstrap") {
    m["boot"] = o.boot;
    m["seed"] = o.seed ? json(*o.seed) : json(nullptr);
    m["quantiles"] = o.quantiles;
    m["threads"] = o.threads;
    m["max_redraws"] = o.max_redraws;
    m["drop_zero_residuals"] = o.drop_zero_residuals;
    m["scale_residuals"] = o.scale_residuals;
    m["process_phi"] = o.process_phi;
  }
  return m;
}

ModelSpec model_spec(const Options& o) {
  ModelSpec spec;
  spec.kind = o.model == "hglm" ? ModelKind::hglm : ModelKind::glm;
  spec.power = FamilyPower(o.p);
  spec.random_power = FamilyPower(o.p_random);
  spec.fixed_dispersion = o.fix_phi;
  spec.fixed_random_dispersion = o.fix_phi_u;
  return spec;
}

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string stat_name(double prob) {
  return "q" + format_number(std::round(prob * 100.0 * 1e6) / 1e6);
}

json fit_json(const FittedModel& fit) {
  json j;
  std::visit(
      [&](const auto& f) {
        const int n = f.horizon;
        j["converged"] = f.converged;
        j["iterations"] = f.iterations;
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GlmFit>) {
          j["model"] = "glm";
          j["intercept"] = f.coefficients[0];
          j["origin_effects"] = std::vector<double>(f.coefficients.data() + 1, f.coefficients.data() + 1 + n);
          j["dev_effects"] = std::vector<double>(f.coefficients.data() + 1 + n, f.coefficients.data() + 1 + 2 * n);
          j["dispersion"] = number(f.dispersion);
          j["deviance"] = f.deviance;
          j["pearson_chi2"] = f.pearson_chi2;
        } else {
          j["model"] = "hglm";
          j["intercept"] = f.fixed[0];
          j["dev_effects"] = std::vector<double>(f.fixed.data() + 1, f.fixed.data() + 1 + n);
          json re = json::array();
          for (const auto& r : random_effect_estimates(f)) re.push_back({{"origin", r.origin}, {"u", r.u}, {"v", r.v}});
          j["random_effects"] = re;
          j["dispersion"] = number(f.dispersion);
          j["random_dispersion"] = number(f.random_dispersion);
          j["full_shrinkage"] = f.full_shrinkage;
        }
      },
      fit);
  return j;
}

json reserve_json(const ReserveReport& r) {
  json rows = json::array();
  for (std::size_t i = 1; i < r.per_origin.size(); ++i) rows.push_back({{"origin", i}, {"reserve", r.per_origin[i]}});
  return {{"per_origin", rows}, {"total", r.total}};
}

json by_origin(const std::vector<double>& values) {
  json rows = json::array();
  for (std::size_t i = 1; i < values.size(); ++i) rows.push_back({{"origin", i}, {"value", values[i]}});
  return rows;
}

void write_plot_csv(std::ostream& out, const ErrorSummary& rm, const QuantileTable& qt) {
  out << "origin,stat,value\n";
  auto emit = [&](const std::string& origin, double rmsep_value, const std::vector<double>& qs) {
    out << origin << ",rmsep," << format_number(rmsep_value) << '\n';
    for (std::size_t k = 0; k < qs.size(); ++k) {
      out << origin << ',' << stat_name(qt.probs[k]) << ',' << format_number(qs[k]) << '\n';
    }
  };
  for (std::size_t i = 1; i < rm.per_origin.size(); ++i) emit(std::to_string(i), rm.per_origin[i], qt.per_origin[i]);
  emit("total", rm.total, qt.total);
}

// Writes to --output when given, else to `out`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(Errc::IoError, "cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot write '" + path + "'");
  body(f);
}

int run_fit(const Options& o, std::ostream& out) {
  const auto t = read_triangle_file(o.input);
  const auto fit = fit_model(t, model_spec(o));
  json doc;
  doc["manifest"] = manifest(o, "fit");
  doc["fit"] = fit_json(fit);
  Sink sink(o.output, out);
  sink.get() << doc.dump(2) << '\n';
  return converged(fit) ? kSuccess : kFitFailure;
}

int run_reserve(const Options& o, std::ostream& out) {
  const auto t = read_triangle_file(o.input);
  const auto spec = model_spec(o);
  const auto report = t.horizon() == 0 ? empty_reserve_report(spec.kind) : reserve_report(fit_model(t, spec));
  Sink sink(o.output, out);
  if (o.format == "csv") {
    sink.get() << "origin,reserve\n";
    for (std::size_t i = 1; i < report.per_origin.size(); ++i) {
      sink.get() << i << ',' << format_number(report.per_origin[i]) << '\n';
    }
    sink.get() << "total," << format_number(report.total) << '\n';
    return kSuccess;
  }
  json doc;
  doc["manifest"] = manifest(o, "reserve");
  doc["model"] = std::string(to_string(spec.kind));
  doc["reserve"] = reserve_json(report);
  sink.get() << doc.dump(2) << '\n';
  return kSuccess;
}

int run_bootstrap(const Options& o, std::ostream& out) {
  if (!o.seed) throw Error(Errc::InvalidArgument, "--seed is required for bootstrap");
  const auto t = read_triangle_file(o.input);
  BootstrapConfig cfg;
  cfg.replicates = o.boot;
  cfg.seed = *o.seed;
  cfg.model = model_spec(o);
  cfg.drop_zero_residuals = o.drop_zero_residuals;
  cfg.scale_residuals = o.scale_residuals;
  cfg.max_redraws = o.max_redraws;
  cfg.threads = o.threads;
  cfg.process_dispersion = o.process_phi == "base" ? ProcessDispersion::base : ProcessDispersion::refit;
  auto probs = o.quantiles;
  std::sort(probs.begin(), probs.end());

  const auto res = bootstrap_run(t, cfg);
  const auto rm = rmsep(res);
  const auto qt = error_quantiles(res, probs);

  json doc;
  doc["manifest"] = manifest(o, "bootstrap");
  doc["model"] = std::string(to_string(cfg.model.kind));
  json base = reserve_json(res.base_reserve);
  base["dispersion"] = number(res.base_dispersion);
  if (res.base_random_dispersion) base["random_dispersion"] = number(*res.base_random_dispersion);
  doc["base"] = base;
  doc["replicates"] = res.replicates.size();
  doc["failures"] = res.failures;
  doc["degraded"] = res.degraded;
  doc["rmsep"] = {{"per_origin", by_origin(rm.per_origin)}, {"total", rm.total}};
  if (cfg.model.kind == ModelKind::glm) {
    const auto analytic = glm_msep_analytic(std::get<GlmFit>(fit_model(t, cfg.model)));
    doc["analytic_rmsep"] = {{"per_origin", by_origin(analytic.per_origin)}, {"total", analytic.total}};
  }
  json qrows = json::array();
  for (std::size_t i = 1; i < qt.per_origin.size(); ++i) qrows.push_back({{"origin", i}, {"values", qt.per_origin[i]}});
  doc["quantiles"] = {{"probs", qt.probs}, {"per_origin", qrows}, {"total", qt.total}};

  Sink sink(o.output, out);
  if (o.format == "csv") {
    write_plot_csv(sink.get(), rm, qt);
  } else {
    sink.get() << doc.dump(2) << '\n';
  }
  std::string plot_path = o.plot_data;
  if (plot_path.empty() && !o.output.empty() && o.format == "json") plot_path = o.output + ".plot.csv";
  if (!plot_path.empty()) write_file(plot_path, [&](std::ostream& f) { write_plot_csv(f, rm, qt); });
  if (!o.dump_replicates.empty()) {
    write_file(o.dump_replicates, [&](std::ostream& f) { write_replicates_csv(f, res); });
  }
  return res.degraded ? kDegraded : kSuccess;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::SingularDesign:
    case Errc::NoConvergence:
    case Errc::StaleFit:
    case Errc::BaseFitError:
    case Errc::DegenerateTriangle:
      return kFitFailure;
    case Errc::TooManyFailures:
      return kDegraded;
    default:
      return kInputError;
  }
}

void add_model_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--input", o.input, "Triangle CSV (long or wide)")->required();
  cmd.add_option("--model", o.model, "glm or hglm")->check(CLI::IsMember({"glm", "hglm"}));
  cmd.add_option("--p", o.p, "Tweedie power of the response, 1 <= p <= 2");
  cmd.add_option("--p-random", o.p_random, "Tweedie power of the random effects (hglm)");
  cmd.add_option("--fix-phi", o.fix_phi, "Fix the response dispersion (hglm)");
  cmd.add_option("--fix-phi-u", o.fix_phi_u, "Fix the random-effect dispersion (hglm)");
  cmd.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd.add_option("--output", o.output, "Write the result here instead of stdout");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loss reserving with Tweedie GLMs, HGLMs and bootstrap prediction error", "lossres"};
  app.require_subcommand(1);
  Options o;
  auto* fit = app.add_subcommand("fit", "Fit a model and print its parameters");
  auto* reserve = app.add_subcommand("reserve", "Predict per-origin and total reserves");
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap RMSEP and absolute-error quantiles");
  for (auto* cmd : {fit, reserve, boot}) add_model_options(*cmd, o);
  boot->add_option("--boot", o.boot, "Number of replicates")->check(CLI::PositiveNumber);
  boot->add_option("--seed", o.seed, "Seed of the counter-based generator")->required();
  boot->add_option("--quantiles", o.quantiles, "Absolute-error quantile levels")->delimiter(',');
  boot->add_option("--threads", o.threads, "OpenMP threads")->check(CLI::PositiveNumber);
  boot->add_option("--max-redraws", o.max_redraws, "Refit failures tolerated per replicate")
      ->check(CLI::NonNegativeNumber);
  boot->add_flag("--drop-zero-residuals", o.drop_zero_residuals, "Leave structurally zero residuals out of the pool");
  boot->add_flag("--scale-residuals", o.scale_residuals, "Inflate residuals by sqrt(N/(N-k))");
  boot->add_option("--process-phi", o.process_phi, "Dispersion of the future-cell draws: refit or base")
      ->check(CLI::IsMember({"refit", "base"}));
  boot->add_option("--dump-replicates", o.dump_replicates, "Per-replicate CSV dump");
  boot->add_option("--plot-data", o.plot_data, "Tidy origin,stat,value CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInputError;
  }

  try {
    if (fit->parsed()) return run_fit(o, out);
    if (reserve->parsed()) return run_reserve(o, out);
    return run_bootstrap(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

}  // namespace lossres::cli

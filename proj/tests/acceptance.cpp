// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (skipped ones do not count).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lossres/bootstrap.hpp"
#include "lossres/cli.hpp"
#include "lossres/glm.hpp"
#include "lossres/hglm.hpp"
#include "lossres/philox.hpp"
#include "lossres/reserving.hpp"
#include "lossres/tweedie.hpp"
#include "oracles.hpp"

using namespace lossres;

namespace {

struct Outcome {
  enum { pass, fail, skip } status;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<oracle::Rows> corpus() {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> size(2, 8);
  std::vector<oracle::Rows> out;
  for (int k = 0; k < 200; ++k) out.push_back(oracle::random_positive_rows(size(rng), rng));
  return out;
}

Outcome chain_ladder_equivalence() {
  double worst = 0;
  for (const auto& rows : corpus()) {
    const auto want = oracle::chain_ladder(rows);
    const auto got = reserve_report(fit_glm(Triangle::from_rows(rows), FamilyPower(1)));
    double total = 0;
    for (std::size_t i = 1; i < want.size(); ++i) {
      worst = std::max(worst, rel(got.per_origin[i], want[i]));
      total += want[i];
    }
    worst = std::max(worst, rel(got.total, total));
  }
  return {worst < 1e-6 ? Outcome::pass : Outcome::fail, fmt("200 triangles, max rel diff %.2e", worst)};
}

Outcome balance() {
  double worst = 0;
  for (const auto& rows : corpus()) {
    const auto t = Triangle::from_rows(rows);
    const auto fit = fit_glm(t, FamilyPower(1));
    const int n = t.horizon();
    for (int k = 0; k <= n; ++k) {
      double r = 0, c = 0;
      for (int j = 0; j + k <= n; ++j) r += fit.fitted(k, j);
      for (int i = 0; i + k <= n; ++i) c += fit.fitted(i, k);
      worst = std::max({worst, rel(r, t.row_sum(k)), rel(c, t.column_sum(k))});
    }
  }
  return {worst < 1e-6 ? Outcome::pass : Outcome::fail, fmt("max rel imbalance %.2e", worst)};
}

Outcome glm_table(const Triangle& t) {
  const auto fit = fit_glm(t, FamilyPower(1));
  const double total = reserve_report(fit).total;
  const bool ok = rel(total, 6047044) <= 5e-4 && rel(fit.dispersion, 14714) <= 0.01;
  return {ok ? Outcome::pass : Outcome::fail, fmt("total %.0f (6047044 +-0.05%%), phi %.1f (14714 +-1%%)", total,
                                                  fit.dispersion)};
}

Outcome hglm_table(const Triangle& t) {
  const auto fit = fit_hglm(t, HglmSpec{});
  const double total = reserve_report(fit).total;
  const bool ok = fit.converged && rel(total, 6145085) <= 0.01 && rel(fit.dispersion, 14739) <= 0.02 &&
                  rel(fit.random_dispersion, 0.0054) <= 0.25;
  return {ok ? Outcome::pass : Outcome::fail,
          fmt("total %.0f (6145085 +-1%%), phi %.1f (14739 +-2%%), phi_u %.5f (0.0054 +-25%%)", total,
              fit.dispersion, fit.random_dispersion)};
}

BootstrapResult reference_bootstrap(const Triangle& t, ModelKind kind) {
  BootstrapConfig cfg;
  cfg.replicates = 1000;
  cfg.seed = 1;
  cfg.model.kind = kind;
  return bootstrap_run(t, cfg);
}

Outcome rmsep_bands(const BootstrapResult& glm, const BootstrapResult& hglm, const Triangle& t) {
  const double g = rmsep(glm).total;
  const double h = rmsep(hglm).total;
  const double analytic = glm_msep_analytic(fit_glm(t, FamilyPower(1))).total;
  const bool ok = g >= 0.9 * 403506 && g <= 1.1 * 403506 && h >= 0.9 * 373914 && h <= 1.1 * 373914 &&
                  rel(g, analytic) <= 0.15;
  return {ok ? Outcome::pass : Outcome::fail,
          fmt("GLM %.0f (x%.3f of 403506), HGLM %.0f (x%.3f of 373914), analytic GLM %.0f (boot/analytic %.3f)", g,
              g / 403506, h, h / 373914, analytic, g / analytic)};
}

Outcome quantile_pattern(const BootstrapResult& glm, const BootstrapResult& hglm) {
  const std::vector<double> probs{0.5, 0.75, 0.85, 0.9, 0.95};
  bool ordered = true;
  for (const auto* res : {&glm, &hglm}) {
    const auto q = error_quantiles(*res, probs);
    auto check = [&](const std::vector<double>& row) {
      for (std::size_t k = 1; k < row.size(); ++k) ordered = ordered && row[k - 1] <= row[k];
    };
    for (const auto& row : q.per_origin) check(row);
    check(q.total);
  }
  const auto q = error_quantiles(hglm, probs);
  const double r = rmsep(hglm).total;
  const bool between = q.total[2] <= r && r <= q.total[4];
  return {ordered && between ? Outcome::pass : Outcome::fail,
          fmt("quantiles ordered: %s; HGLM total RMSEP %.0f vs Q0.85 %.0f, Q0.95 %.0f (Q0.5 %.0f, Q0.75 %.0f)",
              ordered ? "yes" : "no", r, q.total[2], q.total[4], q.total[0], q.total[1])};
}

Outcome shrinkage_limits() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> level(0.8, 1.25), jitter(0.97, 1.03);
  oracle::Rows rows(9);
  for (int i = 0; i <= 8; ++i) {
    const double a = 1e6 * level(rng);
    for (int j = 0; i + j <= 8; ++j) rows[i].push_back(a * std::pow(0.55, j) * jitter(rng));
  }
  const auto t = Triangle::from_rows(rows);
  HglmSpec tight;
  tight.fixed_random_dispersion = 1e-8;
  const auto shrunk = fit_hglm(t, tight);
  const double gap = (shrunk.random.array() - 1.0).abs().maxCoeff();

  double worst = 0;
  for (const auto& r : corpus()) {
    HglmSpec loose;
    loose.fixed_random_dispersion = 1e6;
    const auto tri = Triangle::from_rows(r);
    const auto h = reserve_report(fit_hglm(tri, loose));
    const auto g = reserve_report(fit_glm(tri, FamilyPower(1)));
    for (std::size_t i = 1; i < g.per_origin.size(); ++i) worst = std::max(worst, rel(h.per_origin[i], g.per_origin[i]));
  }
  const bool ok = gap < 1e-3 && worst < 1e-3;
  return {ok ? Outcome::pass : Outcome::fail,
          fmt("phi_u=1e-8: max|u-1| %.2e; phi_u=1e6: max rel reserve diff vs GLM %.2e (200 triangles)", gap, worst)};
}

std::string cli_output(const std::string& input, int threads, const std::string& model, const std::string& dump) {
  std::vector<std::string> args{"lossres", "bootstrap", "--input", input, "--model", model, "--boot", "50",
                                "--seed", "99", "--threads", std::to_string(threads), "--dump-replicates", dump};
  std::ostringstream out, err;
  if (cli::run(args, out, err) != 0) return "error: " + err.str();
  auto doc = nlohmann::ordered_json::parse(out.str());
  doc["manifest"].erase("threads");
  std::ifstream d(dump);
  return doc.dump(2) + std::string(std::istreambuf_iterator<char>(d), {});
}

Outcome determinism(const std::string& data) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "lossres_acceptance";
  fs::create_directories(dir);
  std::string input = data;
  if (input.empty()) {
    input = (dir / "synthetic.csv").string();
    std::mt19937_64 rng(3);
    std::ofstream f(input);
    write_long_csv(f, Triangle::from_rows(oracle::random_positive_rows(8, rng)));
  }
  const auto dump = (dir / "reps.csv").string();
  bool ok = true;
  for (const std::string model : {"glm", "hglm"}) {
    const auto reference = cli_output(input, 1, model, dump);
    ok = ok && reference.rfind("error", 0) != 0 && reference == cli_output(input, 1, model, dump);
    for (int threads : {2, 4, 7}) ok = ok && reference == cli_output(input, threads, model, dump);
  }
  fs::remove_all(dir);
  return {ok ? Outcome::pass : Outcome::fail,
          "B=50, glm+hglm, JSON and replicate dump identical over repeats and threads 1,2,4,7"};
}

Outcome sampler_calibration() {
  const int n = 100000;
  const double mu = 3.0, phi = 1.7;
  std::string detail;
  bool ok = true;
  for (double p : {1.0, 1.5, 2.0}) {
    Philox4x32 rng(42, static_cast<std::uint64_t>(p * 10));
    std::vector<double> x(n);
    for (auto& v : x) v = sample(mu, phi, FamilyPower(p), rng);
    double m = 0;
    for (double v : x) m += v;
    m /= n;
    double s2 = 0, m4 = 0;
    for (double v : x) {
      s2 += (v - m) * (v - m);
      m4 += std::pow(v - m, 4);
    }
    s2 /= n - 1;
    m4 /= n;
    const double var = phi * std::pow(mu, p);
    const double z_mean = (m - mu) / std::sqrt(var / n);
    const double z_var = (s2 - var) / std::sqrt((m4 - s2 * s2) / n);
    ok = ok && std::abs(z_mean) < 4 && std::abs(z_var) < 4;
    detail += fmt("p=%.1f z_mean %+.2f z_var %+.2f; ", p, z_mean, z_var);
  }
  return {ok ? Outcome::pass : Outcome::fail, detail};
}

std::string data_path() {
  if (const char* env = std::getenv("LOSSRES_TRIANGLE")) return env;
  return LOSSRES_TRIANGLE_DEFAULT;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
    failed += o.status == Outcome::fail;
    std::printf("[%s] criterion %d %s: %s\n", tag, id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  const std::string path = data_path();
  std::optional<Triangle> reference;
  if (std::filesystem::exists(path)) reference = read_triangle_file(path);

  report(1, "chain-ladder equivalence", chain_ladder_equivalence);
  report(2, "balance equations", balance);
  if (reference) {
    report(3, "GLM reproduction", [&] { return glm_table(*reference); });
    report(4, "HGLM reproduction", [&] { return hglm_table(*reference); });
    const auto glm = reference_bootstrap(*reference, ModelKind::glm);
    const auto hglm = reference_bootstrap(*reference, ModelKind::hglm);
    report(5, "bootstrap RMSEP bands", [&] { return rmsep_bands(glm, hglm, *reference); });
    report(6, "quantile ordering and RMSEP position", [&] { return quantile_pattern(glm, hglm); });
  } else {
    for (int id = 3; id <= 6; ++id) {
      report(id, "(needs triangle)", [&] { return Outcome{Outcome::skip, "external data missing: " + path}; });
    }
  }
  report(7, "shrinkage limits", shrinkage_limits);
  report(8, "determinism", [&] { return determinism(reference ? path : std::string()); });
  report(9, "sampler calibration", sampler_calibration);
  std::printf("%d criterion(s) failed\n", failed);
  return failed;
}

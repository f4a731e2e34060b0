#pragma once

#include <cmath>
#include <random>

#include "lossres/error.hpp"

namespace lossres {

/// Tweedie power p, restricted to 1 <= p <= 2: p = 1 over-dispersed Poisson,
/// p = 2 Gamma, anything between compound Poisson-Gamma.
class FamilyPower {
 public:
  explicit FamilyPower(double p) : p_(p) {
    if (!(p >= 1.0 && p <= 2.0)) {
      throw Error(Errc::DomainError, "Tweedie power must lie in [1, 2], got " + std::to_string(p));
    }
  }

  double value() const noexcept { return p_; }
  bool is_poisson() const noexcept { return p_ == 1.0; }
  bool is_gamma() const noexcept { return p_ == 2.0; }
  bool is_compound() const noexcept { return p_ > 1.0 && p_ < 2.0; }

  friend bool operator==(FamilyPower, FamilyPower) = default;

 private:
  double p_;
};

/// V(mu) = mu^p.
double variance_function(double mu, FamilyPower p);

/// Unit deviance d(y, mu) >= 0 on the family's support (y >= 0 for p < 2,
/// y > 0 for p = 2). y log(y/mu) is taken as 0 at y = 0.
double unit_deviance(double y, double mu, FamilyPower p);

/// Unit deviance extended to y < 0 for p = 1, used while fitting resampled
/// triangles. For negative y it is the quasi-likelihood form
/// 2(y log(|y|/mu) - (y - mu)): its mu-derivative is the quasi-score, so
/// differences across iterations are meaningful, but it is not a deviance
/// in the distributional sense. Identical to unit_deviance elsewhere.
double quasi_deviance(double y, double mu, FamilyPower p);

/// (y - mu) / sqrt(mu^p).
double pearson_residual(double y, double mu, FamilyPower p);

/// Inverse of pearson_residual: r sqrt(mu^p) + mu.
double from_pearson_residual(double r, double mu, FamilyPower p);

/// One Tweedie(mu, phi, p) draw. p = 1 uses phi * Poisson(mu / phi); p = 2 a
/// Gamma with shape 1/phi and scale phi*mu; 1 < p < 2 the exact compound
/// Poisson sum of Gamma jumps, which is exactly 0 when no jump occurs.
template <class Urbg>
double sample(double mu, double phi, FamilyPower p, Urbg& rng) {
  if (!(mu > 0.0) || !(phi > 0.0) || !std::isfinite(mu) || !std::isfinite(phi)) {
    throw Error(Errc::DomainError, "Tweedie sample needs mu > 0 and phi > 0");
  }
  const double pw = p.value();
  if (p.is_poisson()) {
    std::poisson_distribution<long long> count(mu / phi);
    return phi * static_cast<double>(count(rng));
  }
  if (p.is_gamma()) {
    std::gamma_distribution<double> g(1.0 / phi, phi * mu);
    return g(rng);
  }
  const double rate = std::pow(mu, 2.0 - pw) / (phi * (2.0 - pw));
  const double shape = (2.0 - pw) / (pw - 1.0);
  const double scale = phi * (pw - 1.0) * std::pow(mu, pw - 1.0);
  std::poisson_distribution<long long> count(rate);
  const long long k = count(rng);
  if (k == 0) return 0.0;
  // A sum of k iid Gamma(shape, scale) jumps is Gamma(k * shape, scale).
  std::gamma_distribution<double> jumps(static_cast<double>(k) * shape, scale);
  return jumps(rng);
}

}  // namespace lossres

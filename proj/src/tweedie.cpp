#include "lossres/tweedie.hpp"

#include <cmath>
#include <algorithm>

namespace lossres {

namespace {

void require_positive_mean(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(Errc::DomainError, "mean must be positive and finite");
}

double xlogy_ratio(double y, double mu) { return y == 0.0 ? 0.0 : y * std::log(y / mu); }

}  // namespace

double variance_function(double mu, FamilyPower p) {
  require_positive_mean(mu);
  if (p.is_poisson()) return mu;
  if (p.is_gamma()) return mu * mu;
  return std::pow(mu, p.value());
}

double unit_deviance(double y, double mu, FamilyPower p) {
  require_positive_mean(mu);
  if (p.is_gamma() ? !(y > 0.0) : !(y >= 0.0)) {
    throw Error(Errc::DomainError, "response " + std::to_string(y) + " outside the family support");
  }
  if (p.is_poisson()) return 2.0 * (xlogy_ratio(y, mu) - (y - mu));
  if (p.is_gamma()) return 2.0 * ((y - mu) / mu - std::log(y / mu));
  const double pw = p.value();
  const double a = 1.0 - pw;
  const double b = 2.0 - pw;
  const double d = std::pow(y, b) / (a * b) - y * std::pow(mu, a) / a + std::pow(mu, b) / b;
  return 2.0 * std::max(d, 0.0);
}

double quasi_deviance(double y, double mu, FamilyPower p) {
  if (p.is_poisson() && y < 0.0) {
    require_positive_mean(mu);
    return 2.0 * (y * std::log(-y / mu) - (y - mu));
  }
  return unit_deviance(y, mu, p);
}

double pearson_residual(double y, double mu, FamilyPower p) {
  return (y - mu) / std::sqrt(variance_function(mu, p));
}

double from_pearson_residual(double r, double mu, FamilyPower p) {
  return r * std::sqrt(variance_function(mu, p)) + mu;
}

}  // namespace lossres

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lossres/error.hpp"
#include "lossres/glm.hpp"
#include "lossres/reserving.hpp"
#include "oracles.hpp"

using namespace lossres;

namespace {

const Triangle kThree = Triangle::from_rows({{100, 60, 40}, {110, 66}, {120}});

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Design, RowsAndRank) {
  EXPECT_EQ(design_row({0, 0}, 1), (Eigen::Vector3d(1, 0, 0)));
  EXPECT_EQ(design_row({1, 0}, 1), (Eigen::Vector3d(1, 1, 0)));
  const auto d = build_design(kThree);
  EXPECT_EQ(d.observed.rows(), 6);
  EXPECT_EQ(d.observed.cols(), 5);
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(d.observed).rank(), 5);
  EXPECT_EQ(d.future.rows(), 3);
  EXPECT_THROW(build_design(Triangle::from_rows({{1}})), Error);
}

TEST(Glm, SaturatedTwoByTwo) {
  const auto fit = fit_glm(Triangle::from_rows({{100, 50}, {200}}), FamilyPower(1));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.fitted(0, 0), 100, 1e-8);
  EXPECT_NEAR(fit.fitted(0, 1), 50, 1e-8);
  EXPECT_NEAR(fit.fitted(1, 0), 200, 1e-8);
  EXPECT_NEAR(predict_cell(fit, {1, 1}), 100, 1e-8);
  EXPECT_TRUE(std::isnan(fit.dispersion));
  EXPECT_EQ(fit.residual_dof(), 0);
}

TEST(Glm, ThreeByThreeReserves) {
  const auto fit = fit_glm(kThree, FamilyPower(1));
  const auto r = reserve_report(fit);
  EXPECT_NEAR(r.per_origin[0], 0, 0);
  EXPECT_NEAR(r.per_origin[1], 44, 1e-8);
  EXPECT_NEAR(r.per_origin[2], 120, 1e-8);
  EXPECT_NEAR(r.total, 164, 1e-8);
  EXPECT_NEAR(predict_cell(fit, {0, 0}), std::exp(fit.coefficients[0]), 1e-12);
}

TEST(Glm, ChainLadderEquivalence) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 7;
    const auto rows = oracle::random_positive_rows(n, rng);
    const auto expect = oracle::chain_ladder(rows);
    const auto r = reserve_report(fit_glm(Triangle::from_rows(rows), FamilyPower(1)));
    double total = 0;
    for (int i = 1; i <= n; ++i) {
      EXPECT_LT(rel(r.per_origin[i], expect[i]), 1e-6);
      total += expect[i];
    }
    EXPECT_LT(rel(r.total, total), 1e-6);
  }
}

TEST(Glm, BalanceOfRowsAndColumns) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 7;
    const auto t = Triangle::from_rows(oracle::random_positive_rows(n, rng));
    const auto fit = fit_glm(t, FamilyPower(1));
    for (int k = 0; k <= n; ++k) {
      double row = 0, col = 0;
      for (int j = 0; j + k <= n; ++j) row += fit.fitted(k, j);
      for (int i = 0; i + k <= n; ++i) col += fit.fitted(i, k);
      EXPECT_LT(rel(row, t.row_sum(k)), 1e-6);
      EXPECT_LT(rel(col, t.column_sum(k)), 1e-6);
    }
  }
}

TEST(Glm, ScaleEquivariance) {
  std::mt19937_64 rng(5);
  const auto t = Triangle::from_rows(oracle::random_positive_rows(6, rng));
  const double k = 37.5;
  const auto a = fit_glm(t, FamilyPower(1));
  const auto b = fit_glm(t.scaled(k), FamilyPower(1));
  EXPECT_LT(rel(b.dispersion, k * a.dispersion), 1e-7);
  EXPECT_LT(rel(reserve_report(b).total, k * reserve_report(a).total), 1e-8);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j) EXPECT_LT(rel(b.fitted(i, j), k * a.fitted(i, j)), 1e-8);
  for (std::size_t c = 0; c < a.residuals.size(); ++c) {
    EXPECT_NEAR(b.residuals[c], std::sqrt(k) * a.residuals[c], 1e-6 * (1 + std::abs(b.residuals[c])));
  }
}

TEST(Glm, DevianceNonIncreasing) {
  std::mt19937_64 rng(9);
  for (double p : {1.0, 1.5, 2.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto fit = fit_glm(Triangle::from_rows(oracle::random_positive_rows(7, rng)), FamilyPower(p));
      ASSERT_TRUE(fit.converged);
      const auto& d = fit.deviance_trace;
      for (std::size_t k = 2; k < d.size(); ++k) EXPECT_LE(d[k], d[k - 1] * (1 + 1e-12) + 1e-12);
    }
  }
}

TEST(Glm, InputOrderDoesNotMatter) {
  std::vector<std::string> lines;
  const auto t = Triangle::from_rows({{10, 7, 3, 1}, {12, 8, 4}, {15, 9}, {11}});
  for (auto c : t.observed_cells()) {
    std::ostringstream s;
    s << c.origin << ',' << c.dev << ',' << t.at(c);
    lines.push_back(s.str());
  }
  std::mt19937_64 rng(3);
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string text = "origin,dev,value\n";
  for (auto& l : lines) text += l + "\n";
  std::istringstream in(text);
  const auto shuffled = parse_triangle(in);
  const auto a = fit_glm(t, FamilyPower(1));
  const auto b = fit_glm(shuffled, FamilyPower(1));
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.dispersion, b.dispersion);
}

TEST(Glm, DomainChecks) {
  EXPECT_THROW(fit_glm(Triangle::from_rows({{1, 0, 0}, {2, 0}, {3}}), FamilyPower(1)), Error);
  EXPECT_THROW(fit_glm(Triangle::from_rows({{1, 0, 1}, {2, 1}, {3}}), FamilyPower(2)), Error);
  EXPECT_THROW(fit_glm(Triangle::from_rows({{1, -1, 1}, {2, 1}, {3}}), FamilyPower(1.5)), Error);
  // p = 1 tolerates a negative cell when its column sum stays positive.
  EXPECT_TRUE(fit_glm(Triangle::from_rows({{10, -1, 1}, {20, 4}, {30}}), FamilyPower(1)).converged);
}

TEST(Glm, NonConvergenceIsFlagged) {
  std::mt19937_64 rng(1);
  FitControls c;
  c.max_iterations = 1;
  const auto fit = fit_glm(Triangle::from_rows(oracle::random_positive_rows(5, rng)), FamilyPower(1.5), c);
  EXPECT_FALSE(fit.converged);
  try {
    reserve_report(fit);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StaleFit);
  }
  EXPECT_THROW(glm_msep_analytic(fit), Error);
}

TEST(AnalyticMsep, MatchesPairwiseOracle) {
  std::mt19937_64 rng(31);
  for (double p : {1.0, 1.6, 2.0}) {
    for (int n : {2, 4, 7}) {
      const auto fit = fit_glm(Triangle::from_rows(oracle::random_positive_rows(n, rng)), FamilyPower(p));
      const auto got = glm_msep_analytic(fit);
      const auto want = oracle::pairwise_msep(fit.fitted, fit.dispersion, p);
      EXPECT_LT(rel(got.total * got.total, want.total), 1e-10);
      for (int i = 1; i <= n; ++i) EXPECT_LT(rel(got.per_origin[i] * got.per_origin[i], want.per_origin[i]), 1e-10);
      EXPECT_EQ(got.per_origin[0], 0);
    }
  }
}

TEST(AnalyticMsep, SaturatedIsDegenerate) {
  const auto fit = fit_glm(Triangle::from_rows({{100, 50}, {200}}), FamilyPower(1));
  try {
    glm_msep_analytic(fit);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateTriangle);
  }
}

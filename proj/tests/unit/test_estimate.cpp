#include <doctest.h>

#include <cmath>

#include "dosetrend/contrasts.hpp"
#include "dosetrend/estimate.hpp"
#include "fixtures.hpp"

using namespace dosetrend;
using fixtures::code_of;

namespace {

// Per-group sums of squared deviations, straight from the rows.
std::vector<double> group_ss(const DoseResponseTable& t, const ValidatedDesign& d, std::vector<double>& means) {
  const auto g = row_groups(d, t);
  means.assign(d.group_count(), 0.0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) means[g[r]] += t.rows[r].response / d.groups[g[r]].n;
  std::vector<double> ss(d.group_count(), 0.0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) ss[g[r]] += std::pow(t.rows[r].response - means[g[r]], 2);
  return ss;
}

}  // namespace

TEST_CASE("cell-means OLS matches hand-computed covariances") {
  const auto table = fixtures::reaction();
  const auto design = validate(table);
  std::vector<double> means;
  const auto ss = group_ss(table, design, means);
  const auto fit = fit_cell_means(design, table);
  REQUIRE(fit.coefficients.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(fit.coefficients[i] == doctest::Approx(means[i]).epsilon(1e-12));
  CHECK(fit.residual_df == 36);

  const double pooled = (ss[0] + ss[1] + ss[2] + ss[3]) / 36.0;
  const auto mb = covariance(fit, CovarianceEstimator::model_based);
  const auto hc0 = covariance(fit, CovarianceEstimator::HC0);
  const auto hc3 = covariance(fit, CovarianceEstimator::HC3);
  for (int i = 0; i < 4; ++i) {
    CHECK(mb(i, i) == doctest::Approx(pooled / 10.0));
    CHECK(hc0(i, i) == doctest::Approx(ss[i] / 100.0));
    CHECK(hc3(i, i) == doctest::Approx(ss[i] / 100.0 / std::pow(0.9, 2)));
    for (int j = 0; j < 4; ++j) {
      if (i != j) CHECK(std::abs(hc0(i, j)) < 1e-14);
    }
  }
}

TEST_CASE("HC0 reproduces the published standard errors of the reaction data") {
  const auto table = fixtures::reaction();
  const auto design = validate(table);
  const auto est = with_covariance(fit_cell_means(design, table), CovarianceEstimator::HC0);
  const auto se = [&](int i) { return std::sqrt(est.covariance(i, i) + est.covariance(0, 0)); };
  CHECK(se(1) == doctest::Approx(0.7913).epsilon(1e-4));
  CHECK(se(2) == doctest::Approx(0.8620).epsilon(1e-4));
  CHECK(se(3) == doctest::Approx(0.7743).epsilon(1e-4));
}

TEST_CASE("general OLS agrees with the normal equations") {
  Eigen::MatrixXd x(6, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  Eigen::VectorXd y(6);
  y << 1.1, 2.9, 5.2, 7.1, 8.8, 11.0;
  const auto fit = fit_ols(x, y);
  const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  CHECK(fit.coefficients[0] == doctest::Approx(beta[0]));
  CHECK(fit.coefficients[1] == doctest::Approx(beta[1]));
  CHECK(fit.residual_df == 4);
  Eigen::MatrixXd rank_deficient(4, 2);
  rank_deficient << 1, 2, 1, 2, 1, 2, 1, 2;
  CHECK(code_of([&] { fit_ols(rank_deficient, y.head(4)); }) == ErrorCode::RankDeficientScoring);
}

TEST_CASE("binomial cell means give closed-form log odds and Woolf variances") {
  const auto table = fixtures::case_control();
  const auto design = validate(table);
  const auto fit = fit_cell_means(design, table);
  const double a[] = {165, 74, 90, 122};
  const double b[] = {172, 93, 96, 90};
  const auto cov = covariance(fit, CovarianceEstimator::model_based);
  for (int i = 0; i < 4; ++i) {
    CHECK(fit.coefficients[i] == doctest::Approx(std::log(a[i] / b[i])).epsilon(1e-9));
    CHECK(cov(i, i) == doctest::Approx(1 / a[i] + 1 / b[i]).epsilon(1e-8));
  }
  // One aggregated row per group: every leverage is 1, so the sandwich is undefined.
  CHECK(code_of([&] { covariance(fit, CovarianceEstimator::HC0); }) == ErrorCode::ZeroResidualDf);
}

TEST_CASE("logistic slope agrees with an independent GLM fit") {
  // Reference values from a separate IRLS implementation on the case-control counts.
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 1, 2, 1, 6, 1, 11;
  Eigen::VectorXd s(4), m(4);
  s << 165, 74, 90, 122;
  m << 337, 167, 186, 212;
  const auto fit = fit_glm_binomial_logit(x, s, m);
  CHECK(fit.coefficients[1] == doctest::Approx(0.03249777757110893).epsilon(1e-8));
  CHECK(std::sqrt(covariance(fit, CovarianceEstimator::model_based)(1, 1)) ==
        doctest::Approx(0.01533476585932041).epsilon(1e-7));
  CHECK(std::sqrt(covariance(fit, CovarianceEstimator::HC0)(1, 1)) ==
        doctest::Approx(0.011236346437710102).epsilon(1e-7));
}

TEST_CASE("separation and degenerate counts are reported") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 1, 1;
  Eigen::VectorXd s(2), m(2);
  s << 0, 10;
  m << 10, 10;
  CHECK(code_of([&] { fit_glm_binomial_logit(x, s, m); }) == ErrorCode::SeparationDetected);
  s << 0, 0;
  CHECK(code_of([&] { fit_glm_binomial_logit(x, s, m); }) == ErrorCode::DegenerateCounts);
}

TEST_CASE("joint slope fit: identical scorings are perfectly correlated") {
  const auto table = fixtures::reaction();
  const auto design = validate(table);
  const auto joint = fit_mmm(design, table, {{"a", {0, 1, 2, 3}}, {"b", {0, 2, 4, 6}}});
  CHECK(joint.slopes[0] == doctest::Approx(2 * joint.slopes[1]));
  const double r = joint.slope_covariance(0, 1) /
                   std::sqrt(joint.slope_covariance(0, 0) * joint.slope_covariance(1, 1));
  CHECK(r == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(joint.df == 38);
  CHECK(code_of([&] { fit_mmm(design, table, {{"c", {1, 1, 1, 1}}}); }) == ErrorCode::RankDeficientScoring);
}

TEST_CASE("joint slope SE equals the single-model HC0 sandwich") {
  const auto table = fixtures::case_control();
  const auto design = validate(table);
  const auto joint = fit_mmm(design, table, {{"arithmetic", {0, 2, 6, 11}}});
  CHECK(std::sqrt(joint.slope_covariance(0, 0)) == doctest::Approx(0.011236346437710102).epsilon(1e-7));
}

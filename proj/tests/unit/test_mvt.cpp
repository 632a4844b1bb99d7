#include <doctest.h>

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "dosetrend/mvt.hpp"
#include "dosetrend/random.hpp"
#include "fixtures.hpp"

using namespace dosetrend;
using fixtures::code_of;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// P(all Z_i <= q) for equicorrelated normals (rho >= 0), by one-dimensional quadrature.
double equi_normal_cdf(double q, double rho, int m) {
  const auto f = [&](double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2 * boost::math::constants::pi<double>()) *
           std::pow(normal_cdf((q - std::sqrt(rho) * z) / std::sqrt(1 - rho)), m);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -kInf, kInf, 15, 1e-13);
}

// Same for multivariate t: mix the normal case over s = sqrt(chi2_df / df).
double equi_t_cdf(double q, double rho, int m, double df) {
  const boost::math::chi_squared chi(df);
  const auto g = [&](double x) { return boost::math::pdf(chi, x) * equi_normal_cdf(q * std::sqrt(x / df), rho, m); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, kInf, 10, 1e-10);
}

}  // namespace

TEST_CASE("bivariate orthant probability") {
  const auto corr = CorrelationMatrix::equicorrelated(2, 0.5);
  const std::vector<double> lo{-kInf, -kInf};
  const std::vector<double> hi{0.0, 0.0};
  const auto r = mvn_rect_prob(lo, hi, corr, 11);
  CHECK(std::abs(r.value - 1.0 / 3.0) < 3e-4);
  CHECK(r.mc_error < 3e-4);
  // Closed form 1/4 + asin(rho) / (2 pi) for other correlations.
  for (const double rho : {-0.7, -0.2, 0.3, 0.9}) {
    const auto c = CorrelationMatrix::equicorrelated(2, rho);
    const double exact = 0.25 + std::asin(rho) / (2 * boost::math::constants::pi<double>());
    CHECK(std::abs(mvn_rect_prob(lo, hi, c, 5).value - exact) < 3e-4);
  }
}

TEST_CASE("one dimension is exact") {
  const auto c = CorrelationMatrix::identity(1);
  const std::vector<double> lo{-1.0};
  const std::vector<double> hi{2.0};
  CHECK(mvt_rect_prob(lo, hi, c, 7.0, 1).value ==
        doctest::Approx(student_t_cdf(2.0, 7.0) - student_t_cdf(-1.0, 7.0)).epsilon(1e-12));
  CHECK(mvn_rect_prob(lo, hi, c, 1).value == doctest::Approx(normal_cdf(2.0) - normal_cdf(-1.0)).epsilon(1e-12));
}

TEST_CASE("equicorrelated normal and t probabilities match quadrature") {
  for (const int m : {3, 5}) {
    for (const double rho : {0.0, 0.5, 0.8}) {
      const auto c = CorrelationMatrix::equicorrelated(m, rho);
      const std::vector<double> lo(m, -kInf);
      const std::vector<double> hi(m, 1.7);
      CHECK(std::abs(mvn_rect_prob(lo, hi, c, 3).value - equi_normal_cdf(1.7, rho, m)) < 5e-4);
      CHECK(std::abs(mvt_rect_prob(lo, hi, c, 12.0, 3).value - equi_t_cdf(1.7, rho, m, 12.0)) < 5e-4);
    }
  }
}

TEST_CASE("independence quantiles") {
  const auto c = CorrelationMatrix::identity(2);
  const auto one = equicoordinate_quantile(c, kInf, 0.95, Tail::one_sided, 9);
  CHECK(std::abs(one.q - normal_quantile(std::sqrt(0.95))) < 1e-3);
  CHECK(std::abs(one.q - 1.9545) < 1e-3);
  const auto two = equicoordinate_quantile(c, kInf, 0.95, Tail::two_sided, 9);
  CHECK(std::abs(two.q - normal_quantile(0.5 + 0.5 * std::sqrt(0.95))) < 1e-3);
  const auto t = equicoordinate_quantile(CorrelationMatrix::identity(1), 10.0, 0.975, Tail::one_sided, 9);
  CHECK(t.q == doctest::Approx(student_t_quantile(0.975, 10.0)).epsilon(1e-6));
}

TEST_CASE("Dunnett-type quantile against quadrature") {
  // Balanced many-to-one comparisons: rho = 0.5.
  const auto c = CorrelationMatrix::equicorrelated(3, 0.5);
  const auto q = equicoordinate_quantile(c, 36.0, 0.95, Tail::one_sided, 4);
  CHECK(std::abs(equi_t_cdf(q.q, 0.5, 3, 36.0) - 0.95) < 5e-4);
}

TEST_CASE("results are reproducible for a fixed seed") {
  Eigen::MatrixXd r(3, 3);
  r << 1, 0.3, -0.2, 0.3, 1, 0.4, -0.2, 0.4, 1;
  const CorrelationMatrix c(r);
  const std::vector<double> lo{-1, -2, -kInf};
  const std::vector<double> hi{1.5, 0.5, 1.0};
  const auto a = mvt_rect_prob(lo, hi, c, 20.0, 77);
  const auto b = mvt_rect_prob(lo, hi, c, 20.0, 77);
  CHECK(a.value == b.value);
  CHECK(a.points_used == b.points_used);
}

TEST_CASE("singular correlation is accepted after clipping") {
  Eigen::MatrixXd r(2, 2);
  r << 1, 1, 1, 1;
  const CorrelationMatrix c(r);
  const std::vector<double> lo{-kInf, -kInf};
  const std::vector<double> hi{1.0, 2.0};
  CHECK(std::abs(mvn_rect_prob(lo, hi, c, 1).value - normal_cdf(1.0)) < 1e-3);
}

TEST_CASE("invalid inputs") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0.5, 0.4, 1;
  CHECK(code_of([&] { CorrelationMatrix c(bad); }) == ErrorCode::NotPSD);
  Eigen::MatrixXd indef(3, 3);
  indef << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  CHECK(code_of([&] { CorrelationMatrix c(indef); }) == ErrorCode::NotPSD);
  const auto c = CorrelationMatrix::identity(2);
  const std::vector<double> lo{0.0, 1.0};
  const std::vector<double> hi{1.0, 0.0};
  CHECK(code_of([&] { mvn_rect_prob(lo, hi, c, 1); }) == ErrorCode::InvalidBounds);
  CHECK(code_of([&] { equicoordinate_quantile(c, 5.0, 1.2, Tail::one_sided, 1); }) == ErrorCode::InvalidLevel);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK(code_of([&] { CorrelationMatrix::from_covariance(zero); }) == ErrorCode::ZeroSe);
}

TEST_CASE("quantile cache hands back the computed value") {
  QuantileCache cache;
  const auto c = CorrelationMatrix::equicorrelated(3, 0.4);
  const auto a = cache.get(c, 30.0, 0.95, Tail::two_sided, 3);
  const auto b = cache.get(c, 30.0, 0.95, Tail::two_sided, 3);
  CHECK(a.q == b.q);
  CHECK(cache.size() == 1);
  CHECK(a.q == equicoordinate_quantile(c, 30.0, 0.95, Tail::two_sided, 3).q);
}

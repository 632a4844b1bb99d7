#include <doctest.h>

#include <cmath>

#include "dosetrend/contrasts.hpp"
#include "fixtures.hpp"

using namespace dosetrend;
using fixtures::code_of;

namespace {

ValidatedDesign design_with(std::vector<std::int64_t> n, std::vector<double> doses = {}) {
  ValidatedDesign d;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dose = doses.empty() ? static_cast<double>(i) : doses[i];
    d.groups.push_back({std::to_string(i), dose, n[i]});
  }
  return d;
}

void check_rows_sum_to_zero(const ContrastSet& c) {
  for (Eigen::Index r = 0; r < c.coefficients.rows(); ++r) CHECK(std::abs(c.coefficients.row(r).sum()) < 1e-12);
}

}  // namespace

TEST_CASE("Dunnett rows") {
  const auto c = dunnett_matrix(design_with({10, 10, 10, 10}));
  Eigen::MatrixXd expect(3, 4);
  expect << -1, 1, 0, 0, -1, 0, 1, 0, -1, 0, 0, 1;
  CHECK(c.coefficients.isApprox(expect));
  CHECK(c.labels == std::vector<std::string>{"1 - 0", "2 - 0", "3 - 0"});
}

TEST_CASE("Williams rows pool the top doses with size weights") {
  const auto c = williams_matrix(design_with({5, 2, 3, 5}));
  Eigen::MatrixXd expect(3, 4);
  expect << -1, 0, 0, 1, -1, 0, 3.0 / 8, 5.0 / 8, -1, 0.2, 0.3, 0.5;
  CHECK(c.coefficients.isApprox(expect));
  CHECK(c.labels.front() == "W 1");
  check_rows_sum_to_zero(c);
}

TEST_CASE("changepoint and sequential rows") {
  const auto d = design_with({10, 10, 10, 10});
  const auto cp = changepoint_matrix(d);
  Eigen::MatrixXd expect(3, 4);
  expect << -1, 1.0 / 3, 1.0 / 3, 1.0 / 3, -0.5, -0.5, 0.5, 0.5, -1.0 / 3, -1.0 / 3, -1.0 / 3, 1;
  CHECK(cp.coefficients.isApprox(expect));
  const auto seq = sequential_matrix(d);
  expect << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  CHECK(seq.coefficients.isApprox(expect));
  CHECK(seq.labels[1] == "2 - 1");
}

TEST_CASE("joint Dunnett-Williams stacks both families") {
  const auto j = joint_dunnett_williams(design_with({10, 10, 10}));
  CHECK(j.rows() == 4);
  CHECK(j.labels[0] == "D: 1 - 0");
  CHECK(j.labels[2] == "W: W 1");
  check_rows_sum_to_zero(j);
}

TEST_CASE("lookup by name and raw contrasts") {
  const auto d = design_with({4, 4, 4});
  CHECK(contrasts_by_name("williams", d).coefficients.isApprox(williams_matrix(d).coefficients));
  CHECK(code_of([&] { contrasts_by_name("scheffe", d); }) == ErrorCode::InvalidConfig);
  Eigen::MatrixXd bad(1, 3);
  bad << 1, 1, 0;
  CHECK(code_of([&] { raw_contrasts("x", {"r"}, bad); }) == ErrorCode::InvalidDesign);
}

TEST_CASE("log-dose score for a zero control") {
  CHECK(log_dose_zero_score(0, 1, 10) == doctest::Approx(-0.2558427881104495).epsilon(1e-12));
  CHECK(std::abs(log_dose_zero_score(0, 1, 10) - (std::log(1.0) - std::log(10.0) * 1.0 / 9.0)) < 1e-15);
  const auto s = dose_scores(design_with({5, 5, 5, 5}, {0, 1, 10, 100}), ScoringKind::log_with_s0);
  CHECK(std::abs(s.scores[0] - (-0.25584278811044955)) < 1e-10);
  CHECK(s.scores[3] == doctest::Approx(std::log(100.0)));
  const auto positive = dose_scores(design_with({5, 5, 5}, {1, 2, 4}), ScoringKind::log_with_s0);
  CHECK(positive.scores[0] == doctest::Approx(0.0));
  CHECK(dose_scores(design_with({5, 5, 5}, {0, 5, 25}), ScoringKind::ordinal).scores ==
        std::vector<double>{0, 1, 2});
  CHECK(code_of([&] { dose_scores(design_with({5, 5}, {0, 5}), ScoringKind::log_with_s0); }) ==
        ErrorCode::NonPositiveDoseForLog);
}

TEST_CASE("contrast matrix dump") {
  const auto d = design_with({2, 2});
  const std::string text = format_contrast_matrix(dunnett_matrix(d), d);
  CHECK(text.find("1 - 0\t-1\t1") != std::string::npos);
}

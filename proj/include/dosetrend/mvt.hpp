#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dosetrend {

/// Symmetric, unit-diagonal, positive semidefinite matrix.
class CorrelationMatrix {
 public:
  /// Validates symmetry, unit diagonal, |r| <= 1 and PSD (min eigenvalue >= -1e-10).
  explicit CorrelationMatrix(Eigen::MatrixXd entries);

  static CorrelationMatrix identity(std::size_t m);
  static CorrelationMatrix equicorrelated(std::size_t m, double rho);
  /// Correlation of a covariance matrix; throws ZeroSe on a zero diagonal.
  static CorrelationMatrix from_covariance(const Eigen::MatrixXd& covariance);

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
};

struct ProbResult {
  double value = 0.0;
  double mc_error = 0.0;  // standard error over randomizations
  std::int64_t points_used = 0;
  std::uint64_t seed = 0;
};

struct MvtOptions {
  double abs_error = 1e-4;
  std::int64_t max_points = 10'000'000;
  int randomizations = 12;
  std::int64_t initial_points = 1000;  // per randomization
};

ProbResult mvn_rect_prob(std::span<const double> lower, std::span<const double> upper,
                         const CorrelationMatrix& corr, std::uint64_t seed,
                         const MvtOptions& options = {});

/// Central multivariate t; df = +inf delegates to the normal case.
ProbResult mvt_rect_prob(std::span<const double> lower, std::span<const double> upper,
                         const CorrelationMatrix& corr, double df, std::uint64_t seed,
                         const MvtOptions& options = {});

enum class Tail { one_sided, two_sided };

struct QuantileResult {
  double q = 0.0;
  double achieved = 0.0;  // probability at q
  double mc_error = 0.0;
  int iterations = 0;
};

/// q with P(all T_i <= q) = level (one-sided) or P(all |T_i| <= q) = level.
QuantileResult equicoordinate_quantile(const CorrelationMatrix& corr, double df, double level,
                                       Tail tail, std::uint64_t seed,
                                       const MvtOptions& options = {});

/// Memo of critical values keyed on the correlation (rounded to 1e-9), df,
/// level and tail. Thread-safe.
class QuantileCache {
 public:
  QuantileResult get(const CorrelationMatrix& corr, double df, double level, Tail tail,
                     std::uint64_t seed, const MvtOptions& options = {});
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::vector<std::int64_t>, QuantileResult> entries_;
};

/// Univariate helpers shared across modules.
double normal_cdf(double x);
double normal_quantile(double p);
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);

}  // namespace dosetrend

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosetrend/contrasts.hpp"
#include "dosetrend/estimate.hpp"
#include "dosetrend/mvt.hpp"

namespace dosetrend {

enum class IntervalKind { simultaneous, marginal_anti_bonferroni };

std::string to_string(IntervalKind kind);

inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

struct ContrastRow {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p_adjusted = kNotComputed;
  double p_unadjusted = kNotComputed;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct MctResult {
  std::string family;
  std::vector<ContrastRow> rows;
  Eigen::MatrixXd corr;
  double df = kInfiniteDf;
  double level = 0.95;
  double critical_value = 0.0;
  double p_mc_error = 0.0;
  Alternative alternative = Alternative::greater;
  IntervalKind interval_kind = IntervalKind::simultaneous;
  bool ratio_scale = false;
  LinkScale scale = LinkScale::identity;
};

struct ContrastStat {
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
};

std::vector<ContrastStat> contrast_estimates(const CoefficientEstimates& model,
                                             const Eigen::MatrixXd& contrasts);

CorrelationMatrix contrast_correlation(const Eigen::MatrixXd& contrasts,
                                       const Eigen::MatrixXd& covariance);

/// Single-step max-t adjusted p-values.
std::vector<double> adjusted_p(std::span<const double> t_stats, const CorrelationMatrix& corr,
                               double df, Alternative alternative, std::uint64_t seed,
                               const MvtOptions& options = {}, double* mc_error = nullptr);

std::vector<double> unadjusted_p(std::span<const double> t_stats, double df,
                                 Alternative alternative);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct IntervalSet {
  std::vector<Interval> intervals;
  double critical_value = 0.0;
  double level = 0.0;
};

IntervalSet simultaneous_ci(std::span<const double> estimates, std::span<const double> ses,
                            const CorrelationMatrix& corr, double df, double level,
                            Alternative alternative, std::uint64_t seed,
                            const MvtOptions& options = {}, QuantileCache* cache = nullptr);

/// Two-sided simultaneous intervals at the deflated joint level 1 - 2*alpha*k,
/// whose per-row coverage is close to 1 - 2*alpha.
IntervalSet marginal_anti_bonferroni_ci(std::span<const double> estimates,
                                        std::span<const double> ses,
                                        const CorrelationMatrix& corr, double df, double alpha,
                                        std::size_t k, std::uint64_t seed,
                                        const MvtOptions& options = {},
                                        QuantileCache* cache = nullptr);

double anti_bonferroni_level(double alpha, std::size_t k);

struct MctOptions {
  double level = 0.95;
  IntervalKind interval_kind = IntervalKind::simultaneous;
  double alpha = 0.05;  // used by the anti-Bonferroni interval kind
  bool compute_adjusted_p = true;
  std::uint64_t seed = 20240601;
  MvtOptions mvt{};
  QuantileCache* cache = nullptr;
};

/// Full multiple-contrast evaluation of `set` on `model`. Anti-Bonferroni
/// intervals are always two-sided; p-values follow `set.alternative`.
MctResult run_mct(const CoefficientEstimates& model, const ContrastSet& set,
                  const MctOptions& options = {});

/// Exponentiates estimates and interval limits of a logit-scale result.
MctResult exp_transform(const MctResult& result);

/// Fixed-width table: Contrast | Estimate | SE | test statistics | adjusted p-value.
std::string format_mct_table(const MctResult& result);

/// "<0.00001" below 5e-5, otherwise four decimals.
std::string format_p(double p);

}  // namespace dosetrend

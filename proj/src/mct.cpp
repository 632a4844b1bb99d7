#include "dosetrend/mct.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dosetrend/error.hpp"
#include "dosetrend/random.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "mct";
constexpr double kInf = std::numeric_limits<double>::infinity();

Tail tail_of(Alternative alternative) {
  return alternative == Alternative::two_sided ? Tail::two_sided : Tail::one_sided;
}

QuantileResult critical_value(const CorrelationMatrix& corr, double df, double level, Tail tail,
                              std::uint64_t seed, const MvtOptions& options, QuantileCache* cache) {
  return cache ? cache->get(corr, df, level, tail, seed, options)
               : equicoordinate_quantile(corr, df, level, tail, seed, options);
}

void check_lengths(std::span<const double> estimates, std::span<const double> ses, const CorrelationMatrix& corr) {
  if (estimates.size() != ses.size() || estimates.size() != corr.dim()) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "estimates, standard errors and correlation disagree in size");
  }
}

}  // namespace

std::string to_string(IntervalKind kind) {
  return kind == IntervalKind::simultaneous ? "simultaneous" : "marginal_anti_bonferroni";
}

std::vector<ContrastStat> contrast_estimates(const CoefficientEstimates& model, const Eigen::MatrixXd& contrasts) {
  if (contrasts.cols() != model.coefficients.size()) {
    throw Error(ErrorCode::DimensionMismatch, kModule,
                fmt::format("contrast width {} differs from {} coefficients", contrasts.cols(), model.coefficients.size()));
  }
  const Eigen::VectorXd est = contrasts * model.coefficients;
  const Eigen::MatrixXd cov = contrasts * model.covariance * contrasts.transpose();
  std::vector<ContrastStat> out;
  out.reserve(static_cast<std::size_t>(est.size()));
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    const double var = cov(i, i);
    if (!(var > 0) || !std::isfinite(var)) {
      throw Error(ErrorCode::ZeroSe, kModule, fmt::format("contrast row {} has zero standard error", i + 1));
    }
    const double se = std::sqrt(var);
    out.push_back({est[i], se, est[i] / se});
  }
  return out;
}

CorrelationMatrix contrast_correlation(const Eigen::MatrixXd& contrasts, const Eigen::MatrixXd& covariance) {
  return CorrelationMatrix::from_covariance(contrasts * covariance * contrasts.transpose());
}

std::vector<double> unadjusted_p(std::span<const double> t_stats, double df, Alternative alternative) {
  std::vector<double> out;
  out.reserve(t_stats.size());
  for (const double t : t_stats) {
    switch (alternative) {
      case Alternative::greater: out.push_back(1.0 - student_t_cdf(t, df)); break;
      case Alternative::less: out.push_back(student_t_cdf(t, df)); break;
      case Alternative::two_sided: out.push_back(std::min(1.0, 2.0 * student_t_cdf(-std::abs(t), df))); break;
    }
  }
  return out;
}

std::vector<double> adjusted_p(std::span<const double> t_stats, const CorrelationMatrix& corr, double df,
                               Alternative alternative, std::uint64_t seed, const MvtOptions& options,
                               double* mc_error) {
  if (t_stats.size() != corr.dim()) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "statistics and correlation disagree in size");
  }
  const std::size_t m = t_stats.size();
  std::vector<double> out;
  out.reserve(m);
  double worst = 0.0;
  std::vector<double> lower(m);
  std::vector<double> upper(m);
  for (std::size_t i = 0; i < m; ++i) {
    double c = 0.0;
    switch (alternative) {
      case Alternative::greater: c = t_stats[i]; break;
      case Alternative::less: c = -t_stats[i]; break;  // null distribution is symmetric
      case Alternative::two_sided: c = std::abs(t_stats[i]); break;
    }
    if (alternative == Alternative::two_sided && c == 0.0) {
      out.push_back(1.0);
      continue;
    }
    std::fill(lower.begin(), lower.end(), alternative == Alternative::two_sided ? -c : -kInf);
    std::fill(upper.begin(), upper.end(), c);
    const ProbResult r = mvt_rect_prob(lower, upper, corr, df, mix_seed(seed, i), options);
    worst = std::max(worst, r.mc_error);
    out.push_back(std::clamp(1.0 - r.value, 0.0, 1.0));
  }
  if (mc_error) *mc_error = worst;
  return out;
}

IntervalSet simultaneous_ci(std::span<const double> estimates, std::span<const double> ses,
                            const CorrelationMatrix& corr, double df, double level, Alternative alternative,
                            std::uint64_t seed, const MvtOptions& options, QuantileCache* cache) {
  check_lengths(estimates, ses, corr);
  const QuantileResult q = critical_value(corr, df, level, tail_of(alternative), seed, options, cache);
  IntervalSet out;
  out.critical_value = q.q;
  out.level = level;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double half = q.q * ses[i];
    Interval iv{estimates[i] - half, estimates[i] + half};
    if (alternative == Alternative::greater) iv.upper = kInf;
    if (alternative == Alternative::less) iv.lower = -kInf;
    out.intervals.push_back(iv);
  }
  return out;
}

double anti_bonferroni_level(double alpha, std::size_t k) {
  const double level = 1.0 - 2.0 * alpha * static_cast<double>(k);
  if (!(alpha > 0) || !(level > 0)) {
    throw Error(ErrorCode::LevelUnderflow, kModule,
                fmt::format("joint level 1 - 2*{}*{} is not positive", alpha, k));
  }
  return level;
}

IntervalSet marginal_anti_bonferroni_ci(std::span<const double> estimates, std::span<const double> ses,
                                        const CorrelationMatrix& corr, double df, double alpha, std::size_t k,
                                        std::uint64_t seed, const MvtOptions& options, QuantileCache* cache) {
  return simultaneous_ci(estimates, ses, corr, df, anti_bonferroni_level(alpha, k), Alternative::two_sided, seed,
                         options, cache);
}

MctResult run_mct(const CoefficientEstimates& model, const ContrastSet& set, const MctOptions& options) {
  const auto stats = contrast_estimates(model, set.coefficients);
  const CorrelationMatrix corr = contrast_correlation(set.coefficients, model.covariance);
  std::vector<double> est;
  std::vector<double> se;
  std::vector<double> t;
  for (const auto& s : stats) {
    est.push_back(s.estimate);
    se.push_back(s.se);
    t.push_back(s.t);
  }

  MctResult result;
  result.family = set.family_name;
  result.corr = corr.entries();
  result.df = model.df;
  result.alternative = set.alternative;
  result.interval_kind = options.interval_kind;
  result.scale = model.scale;

  const auto p_raw = unadjusted_p(t, model.df, set.alternative);
  std::vector<double> p_adj(t.size(), kNotComputed);
  if (options.compute_adjusted_p) {
    p_adj = adjusted_p(t, corr, model.df, set.alternative, mix_seed(options.seed, 1), options.mvt, &result.p_mc_error);
  }

  IntervalSet intervals;
  if (options.interval_kind == IntervalKind::simultaneous) {
    intervals = simultaneous_ci(est, se, corr, model.df, options.level, set.alternative, mix_seed(options.seed, 2),
                                options.mvt, options.cache);
  } else {
    intervals = marginal_anti_bonferroni_ci(est, se, corr, model.df, options.alpha, stats.size(),
                                            mix_seed(options.seed, 2), options.mvt, options.cache);
  }
  result.level = intervals.level;
  result.critical_value = intervals.critical_value;

  for (std::size_t i = 0; i < stats.size(); ++i) {
    ContrastRow row;
    row.label = set.labels[i];
    row.estimate = est[i];
    row.se = se[i];
    row.t = t[i];
    row.p_unadjusted = p_raw[i];
    row.p_adjusted = p_adj[i];
    row.lower = intervals.intervals[i].lower;
    row.upper = intervals.intervals[i].upper;
    result.rows.push_back(std::move(row));
  }
  return result;
}

MctResult exp_transform(const MctResult& result) {
  if (result.scale != LinkScale::logit) {
    throw Error(ErrorCode::ScaleMismatch, kModule, "ratio transform needs a logit-scale result");
  }
  if (result.ratio_scale) return result;
  MctResult out = result;
  out.ratio_scale = true;
  for (auto& row : out.rows) {
    row.estimate = std::exp(row.estimate);
    row.lower = std::exp(row.lower);
    row.upper = std::exp(row.upper);
  }
  return out;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 5e-5) return "<0.00001";
  return fmt::format("{:.4f}", p);
}

std::string format_mct_table(const MctResult& result) {
  std::size_t width = 8;
  for (const auto& row : result.rows) width = std::max(width, row.label.size());
  std::string out = fmt::format("{:>{}} {:>10} {:>10} {:>16} {:>17}\n", "Contrast", width, "Estimate", "SE",
                                "test statistics", "adjusted p-value");
  for (const auto& row : result.rows) {
    out += fmt::format("{:>{}} {:>10.4f} {:>10.4f} {:>16.4f} {:>17}\n", row.label, width, row.estimate, row.se,
                       row.t, format_p(row.p_adjusted));
  }
  return out;
}

}  // namespace dosetrend

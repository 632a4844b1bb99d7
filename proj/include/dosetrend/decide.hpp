#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosetrend/mct.hpp"

namespace dosetrend {

/// Ordered claim lattice: absolute => strict => common_global => none.
enum class Claim { none = 0, common_global = 1, strict = 2, absolute = 3 };
enum class Direction { increasing, decreasing };

std::string to_string(Claim claim);
std::string to_string(Direction direction);
Direction parse_direction(const std::string& text);

/// Deterministic band around alpha inside which a p-value is treated as a tie.
inline constexpr double kTieBand = 1e-3;

struct GlobalTrend {
  bool claimed = false;
  std::vector<std::string> supporting;
  bool ambiguous = false;
};

/// Common trend: some one-sided simultaneous Williams bound excludes zero.
GlobalTrend global_trend(const MctResult& williams, double alpha);

struct CtpResult {
  bool absolute = false;
  /// Dose indices (1-based) rejected along the chain k, k-1, ..., in test order.
  std::vector<std::size_t> rejected;
  /// Dose index whose test failed and stopped the chain.
  std::optional<std::size_t> stopped_at;
  /// Annotation: p_k < p_{k-1} < ... < p_1.
  bool p_ordered = false;
  bool ambiguous = false;
};

/// Fixed-sequence closed-testing shortcut on one-sided unadjusted pairwise
/// p-values. `p_by_dose[i]` belongs to the contrast (i+1) - 0.
CtpResult absolute_trend_ctp(std::span<const double> p_by_dose, double alpha);

struct TrendVerdict {
  Claim claim = Claim::none;
  Direction direction = Direction::increasing;
  double eta = 0.0;
  std::vector<std::string> supporting;
  std::vector<std::string> violating;
  std::optional<double> minimal_eta;
  double alpha = 0.05;
  bool ambiguous = false;
  std::vector<std::string> notes;
  CtpResult ctp;
  bool strict_zero = false;  // strict claim would hold at eta = 0
};

/// Williams leg and non-inferiority leg combined by intersection-union.
/// `dunnett_marginal` must carry two-sided anti-Bonferroni intervals.
TrendVerdict strict_trend(const MctResult& williams, const MctResult& dunnett_marginal,
                          double eta, double alpha);

/// Smallest eta >= 0 at which strict_trend claims. Throws GlobalTrendAbsent.
double minimal_eta(const MctResult& williams, const MctResult& dunnett_marginal, double alpha);

/// Combines all three procedures into one lattice-consistent verdict.
/// `pairwise_unadjusted_p` holds one-sided unadjusted p for (1-0, ..., k-0).
TrendVerdict decide_trend(const MctResult& williams, const MctResult& dunnett_marginal,
                          std::span<const double> pairwise_unadjusted_p, double eta,
                          double alpha);

struct PatternFlag {
  bool flagged = false;
  std::string pattern;
};

PatternFlag detect_top_only(const MctResult& dunnett, double alpha);

/// Plateau signature mu_0 < mu_1 = ... = mu_k: the full-pool Williams row is significant, has
/// the largest statistic and no sequential increment beyond dose 1 is significant.
PatternFlag detect_plateau(const MctResult& williams, const MctResult& sequential, double alpha);

/// Direction of the Williams row with the largest |t|.
Direction infer_direction(std::span<const ContrastStat> williams_stats);

}  // namespace dosetrend

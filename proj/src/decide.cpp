#include "dosetrend/decide.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dosetrend/error.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "decide";

Direction direction_of(const MctResult& result) {
  switch (result.alternative) {
    case Alternative::greater: return Direction::increasing;
    case Alternative::less: return Direction::decreasing;
    case Alternative::two_sided: break;
  }
  throw Error(ErrorCode::InvalidConfig, kModule,
              fmt::format("{} result must use a one-sided alternative", result.family));
}

void require_level(const MctResult& result, double alpha) {
  if (result.interval_kind != IntervalKind::simultaneous || std::abs(result.level - (1.0 - alpha)) > 1e-9) {
    throw Error(ErrorCode::InvalidConfig, kModule,
                fmt::format("{} result must carry simultaneous intervals at level 1 - alpha = {}", result.family,
                            1.0 - alpha));
  }
}

// One-sided simultaneous bound excludes zero in the direction of the alternative.
bool significant(const MctResult& result, const ContrastRow& row) {
  return result.alternative == Alternative::greater ? row.lower > 0.0 : row.upper < 0.0;
}

bool near_alpha(double p, double alpha) { return !std::isnan(p) && std::abs(p - alpha) < kTieBand; }

// Largest opposite-direction excursion of the pairwise non-inferiority bounds;
// negative when every bound already lies on the trend side of zero.
double raw_excess(const MctResult& dunnett_marginal, Direction direction) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : dunnett_marginal.rows) {
    worst = std::max(worst, direction == Direction::increasing ? -row.lower : row.upper);
  }
  return worst;
}

void require_marginal(const MctResult& dunnett_marginal, std::size_t k) {
  if (dunnett_marginal.alternative != Alternative::two_sided &&
      dunnett_marginal.interval_kind != IntervalKind::marginal_anti_bonferroni) {
    throw Error(ErrorCode::InvalidConfig, kModule, "non-inferiority leg needs two-sided pairwise intervals");
  }
  if (dunnett_marginal.rows.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "pairwise and Williams families disagree on k");
  }
}

}  // namespace

std::string to_string(Claim claim) {
  switch (claim) {
    case Claim::none: return "none";
    case Claim::common_global: return "common_global";
    case Claim::strict: return "strict";
    case Claim::absolute: return "absolute";
  }
  return "?";
}

std::string to_string(Direction direction) {
  return direction == Direction::increasing ? "increasing" : "decreasing";
}

Direction parse_direction(const std::string& text) {
  if (text == "increasing") return Direction::increasing;
  if (text == "decreasing") return Direction::decreasing;
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown direction '" + text + "'");
}

GlobalTrend global_trend(const MctResult& williams, double alpha) {
  direction_of(williams);
  require_level(williams, alpha);
  GlobalTrend out;
  for (const auto& row : williams.rows) {
    if (significant(williams, row)) out.supporting.push_back(row.label);
    if (near_alpha(row.p_adjusted, alpha)) out.ambiguous = true;
  }
  out.claimed = !out.supporting.empty();
  return out;
}

CtpResult absolute_trend_ctp(std::span<const double> p_by_dose, double alpha) {
  CtpResult out;
  const std::size_t k = p_by_dose.size();
  for (std::size_t dose = k; dose >= 1; --dose) {
    const double p = p_by_dose[dose - 1];
    if (near_alpha(p, alpha)) out.ambiguous = true;
    if (p < alpha) {
      out.rejected.push_back(dose);
    } else {
      out.stopped_at = dose;
      break;
    }
  }
  out.absolute = k > 0 && out.rejected.size() == k;
  out.p_ordered = true;
  for (std::size_t i = 1; i < k; ++i) {
    if (!(p_by_dose[i] < p_by_dose[i - 1])) out.p_ordered = false;
  }
  return out;
}

TrendVerdict strict_trend(const MctResult& williams, const MctResult& dunnett_marginal, double eta, double alpha) {
  if (eta < 0 || std::isnan(eta)) throw Error(ErrorCode::NegativeEta, kModule, fmt::format("eta = {} is negative", eta));
  require_marginal(dunnett_marginal, williams.rows.size());
  const GlobalTrend global = global_trend(williams, alpha);

  TrendVerdict v;
  v.direction = direction_of(williams);
  v.eta = eta;
  v.alpha = alpha;
  v.ambiguous = global.ambiguous;
  v.supporting = global.supporting;
  for (const auto& row : dunnett_marginal.rows) {
    const bool non_inferior = v.direction == Direction::increasing ? row.lower > -eta : row.upper < eta;
    if (!non_inferior) v.violating.push_back(row.label);
  }
  const double excess = raw_excess(dunnett_marginal, v.direction);
  if (global.claimed) {
    v.minimal_eta = std::max(0.0, excess);
    v.strict_zero = excess < 0.0;
    v.claim = v.violating.empty() ? Claim::strict : Claim::common_global;
  } else {
    v.claim = Claim::none;
    v.notes.push_back("no Williams bound excludes zero; strict and absolute claims are unavailable");
  }
  if (global.ambiguous) v.notes.push_back("a Williams adjusted p-value lies within the tie band of alpha");
  return v;
}

double minimal_eta(const MctResult& williams, const MctResult& dunnett_marginal, double alpha) {
  require_marginal(dunnett_marginal, williams.rows.size());
  if (!global_trend(williams, alpha).claimed) {
    throw Error(ErrorCode::GlobalTrendAbsent, kModule, "minimal eta is defined only when a common trend holds");
  }
  return std::max(0.0, raw_excess(dunnett_marginal, direction_of(williams)));
}

TrendVerdict decide_trend(const MctResult& williams, const MctResult& dunnett_marginal,
                          std::span<const double> pairwise_unadjusted_p, double eta, double alpha) {
  if (pairwise_unadjusted_p.size() != williams.rows.size()) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "one unadjusted p-value per dose group is required");
  }
  TrendVerdict v = strict_trend(williams, dunnett_marginal, eta, alpha);
  v.ctp = absolute_trend_ctp(pairwise_unadjusted_p, alpha);
  if (v.ctp.ambiguous) {
    v.ambiguous = true;
    v.notes.push_back("an unadjusted pairwise p-value lies within the tie band of alpha");
  }
  if (v.ctp.absolute && v.strict_zero) {
    v.claim = Claim::absolute;
  } else if (v.ctp.absolute) {
    v.notes.push_back("the closed-testing chain rejects every pairwise hypothesis, but the Williams and "
                      "non-inferiority legs do not both hold at eta = 0; absolute is not claimed");
  }
  if (v.ctp.absolute && !v.ctp.p_ordered) {
    v.notes.push_back("pairwise p-values are not ordered by dose");
  }
  return v;
}

PatternFlag detect_top_only(const MctResult& dunnett, double alpha) {
  direction_of(dunnett);
  require_level(dunnett, alpha);
  PatternFlag flag;
  if (dunnett.rows.empty()) return flag;
  const std::size_t k = dunnett.rows.size();
  bool others = false;
  for (std::size_t i = 0; i + 1 < k; ++i) others = others || significant(dunnett, dunnett.rows[i]);
  flag.flagged = significant(dunnett, dunnett.rows[k - 1]) && !others;
  if (flag.flagged) {
    flag.pattern = fmt::format("only the top dose ({}) differs from control; lower doses are non-significant",
                               dunnett.rows[k - 1].label);
  }
  return flag;
}

PatternFlag detect_plateau(const MctResult& williams, const MctResult& sequential, double alpha) {
  const Direction direction = direction_of(williams);
  require_level(sequential, alpha);
  PatternFlag flag;
  const std::size_t k = williams.rows.size();
  if (k < 2 || sequential.rows.size() != k) return flag;
  const double sign = direction == Direction::increasing ? 1.0 : -1.0;
  const double full_pool = sign * williams.rows[k - 1].t;
  bool largest = true;
  for (std::size_t j = 0; j + 1 < k; ++j) largest = largest && full_pool > sign * williams.rows[j].t;
  bool flat_increments = true;
  for (std::size_t i = 1; i < k; ++i) flat_increments = flat_increments && !significant(sequential, sequential.rows[i]);
  flag.flagged = significant(williams, williams.rows[k - 1]) && largest && flat_increments;
  if (flag.flagged) {
    flag.pattern = fmt::format("plateau: the full-pool contrast {} dominates and no increment beyond dose 1 is significant",
                               williams.rows[k - 1].label);
  }
  return flag;
}

Direction infer_direction(std::span<const ContrastStat> williams_stats) {
  double best = 0.0;
  for (const auto& s : williams_stats) {
    if (std::abs(s.t) > std::abs(best)) best = s.t;
  }
  return best >= 0 ? Direction::increasing : Direction::decreasing;
}

}  // namespace dosetrend

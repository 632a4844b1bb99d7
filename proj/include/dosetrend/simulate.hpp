#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dosetrend/data.hpp"
#include "dosetrend/decide.hpp"
#include "dosetrend/estimate.hpp"
#include "dosetrend/mvt.hpp"

namespace dosetrend {

enum class ShapeTag { flat, linear, plateau, top_only, low_dose_reversal, custom };

std::string to_string(ShapeTag tag);
ShapeTag parse_shape(const std::string& text);

struct Scenario {
  EndpointKind endpoint = EndpointKind::continuous;
  std::vector<double> profile;  // means, or proportions for binomial
  std::vector<double> sigma;    // per-group sd (continuous)
  std::vector<std::int64_t> n;
  std::vector<double> doses;    // defaults to 0..k
  ShapeTag shape = ShapeTag::custom;
  std::uint64_t seed = 1;
};

/// Checks dimensions, sigma > 0 and proportions in (0, 1). Sizes are not
/// checked here; empty groups are rejected by `validate`.
void check_scenario(const Scenario& scenario);

/// Preset profiles over four groups with n = 20 and sigma = 1:
/// flat (0,0,0,0), linear (0,1,2,3), plateau (0,2,2,2), top_only (0,0,0,3),
/// low_dose_reversal (0,-1,-0.5,2.5).
Scenario preset_scenario(ShapeTag tag, std::uint64_t seed = 1);

/// One dataset; replicate r draws from Philox substream (seed, r).
DoseResponseTable generate(const Scenario& scenario, std::uint64_t replicate = 0);

struct SimulationOptions {
  std::int64_t reps = 1000;
  double alpha = 0.05;
  double eta = 0.0;
  Direction direction = Direction::increasing;
  CovarianceEstimator covariance = CovarianceEstimator::model_based;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  MvtOptions mvt{};
};

struct ClaimRate {
  std::string claim;
  std::int64_t count = 0;
  double rate = 0.0;
  double mc_se = 0.0;
};

struct RateTable {
  std::int64_t reps = 0;
  std::int64_t fit_failures = 0;
  std::vector<ClaimRate> rates;

  const ClaimRate& at(const std::string& claim) const;
};

/// Claim rates for: common_global, strict_eta, strict_0, absolute,
/// ctp_chain, top_only, plateau.
RateTable operating_characteristics(const Scenario& scenario, const SimulationOptions& options);

std::string format_rates_csv(const RateTable& table);

}  // namespace dosetrend

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dosetrend/contrasts.hpp"
#include "dosetrend/data.hpp"
#include "dosetrend/decide.hpp"
#include "dosetrend/estimate.hpp"
#include "dosetrend/mct.hpp"

namespace dosetrend {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

enum class Family { dunnett, williams, changepoint, sequential, joint_dw, tukey_regression };

std::string to_string(Family family);
Family parse_family(const std::string& text);

enum class DirectionSetting { increasing, decreasing, automatic };

struct AnalysisConfig {
  ColumnSchema schema;
  std::vector<Family> families{Family::dunnett, Family::williams};
  std::optional<CovarianceEstimator> covariance;  // default: HC0 continuous, model_based binomial
  double alpha = 0.05;
  std::optional<double> eta;
  DirectionSetting direction = DirectionSetting::automatic;
  std::uint64_t seed = 20240601;
  std::int64_t mvt_points = 10'000'000;
  std::optional<bool> ratio_scale;  // default: on for binomial endpoints

  CovarianceEstimator effective_covariance() const;
  bool effective_ratio_scale() const;
  /// Checks alpha in (0, 0.5), non-empty families, eta >= 0.
  void check() const;
  /// Canonical `key = value` rendering (also hashed into the provenance block).
  std::string canonical() const;
};

/// Applies one `key = value` setting. Throws InvalidConfig on unknown keys or
/// unparsable values.
void set_config_value(AnalysisConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` file; `#` starts a comment.
void apply_config_text(AnalysisConfig& config, const std::string& text);

struct TukeyResult {
  JointFit fit;
  MctResult mct;
  std::vector<DoseScoring> scorings;
};

struct AnalysisResult {
  ValidatedDesign design;
  std::vector<GroupSummary> summaries;
  CovarianceEstimator covariance = CovarianceEstimator::HC0;
  std::vector<MctResult> families;
  std::optional<MctResult> williams_decision;
  std::optional<MctResult> dunnett_marginal;
  std::vector<double> pairwise_unadjusted_p;
  std::optional<TrendVerdict> verdict;
  std::optional<TukeyResult> tukey;
  PatternFlag top_only;
  PatternFlag plateau;
};

struct Provenance {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t data_hash = 0;
  std::string data_name;
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a(const std::string& bytes);

/// Requested families plus the trend verdict.
AnalysisResult analyze(const DoseResponseTable& table, const AnalysisConfig& config);

/// Williams simultaneous + Dunnett anti-Bonferroni intervals + verdict.
AnalysisResult trend_report(const DoseResponseTable& table, const AnalysisConfig& config);

/// Joint max-t over arithmetic, ordinal and log-dose slopes.
AnalysisResult tukey_report(const DoseResponseTable& table, const AnalysisConfig& config);

nlohmann::ordered_json report_json(const AnalysisResult& result, const AnalysisConfig& config,
                                   const Provenance& provenance);
std::string report_text(const AnalysisResult& result, const AnalysisConfig& config);
/// family,label,lower,estimate,upper,scale
std::string intervals_csv(const AnalysisResult& result, const AnalysisConfig& config);
std::string verdict_text(const TrendVerdict& verdict, const ValidatedDesign& design);

}  // namespace dosetrend

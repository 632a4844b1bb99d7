#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dosetrend {

enum class ErrorCode {
  // data
  MissingColumn,
  NonNumericValue,
  NegativeCount,
  MalformedInput,
  SingleGroup,
  InconsistentDoseWithinGroup,
  DuplicateDose,
  EmptyGroup,
  EndpointMismatch,
  // estimate
  ZeroResidualDf,
  SeparationDetected,
  NoConvergence,
  RankDeficientScoring,
  DimensionMismatch,
  DegenerateCounts,
  // contrasts
  NonPositiveDoseForLog,
  InvalidDesign,
  // mvt
  NotPSD,
  InvalidBounds,
  InvalidLevel,
  // mct
  ZeroSe,
  LevelUnderflow,
  ScaleMismatch,
  // decide
  NegativeEta,
  GlobalTrendAbsent,
  // cli
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad input or configuration (CLI exit code 2);
/// false for numerical failures (exit code 3).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error("[" + module + "] " + std::string(to_string(code)) + ": " + message),
        code_(code),
        module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace dosetrend

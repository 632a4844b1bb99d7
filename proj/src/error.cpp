#include "dosetrend/error.hpp"

namespace dosetrend {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericValue: return "NonNumericValue";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::SingleGroup: return "SingleGroup";
    case ErrorCode::InconsistentDoseWithinGroup: return "InconsistentDoseWithinGroup";
    case ErrorCode::DuplicateDose: return "DuplicateDose";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EndpointMismatch: return "EndpointMismatch";
    case ErrorCode::ZeroResidualDf: return "ZeroResidualDf";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficientScoring: return "RankDeficientScoring";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateCounts: return "DegenerateCounts";
    case ErrorCode::NonPositiveDoseForLog: return "NonPositiveDoseForLog";
    case ErrorCode::InvalidDesign: return "InvalidDesign";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::ZeroSe: return "ZeroSe";
    case ErrorCode::LevelUnderflow: return "LevelUnderflow";
    case ErrorCode::ScaleMismatch: return "ScaleMismatch";
    case ErrorCode::NegativeEta: return "NegativeEta";
    case ErrorCode::GlobalTrendAbsent: return "GlobalTrendAbsent";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::NonNumericValue:
    case ErrorCode::NegativeCount:
    case ErrorCode::MalformedInput:
    case ErrorCode::SingleGroup:
    case ErrorCode::InconsistentDoseWithinGroup:
    case ErrorCode::DuplicateDose:
    case ErrorCode::EmptyGroup:
    case ErrorCode::EndpointMismatch:
    case ErrorCode::NonPositiveDoseForLog:
    case ErrorCode::InvalidDesign:
    case ErrorCode::NegativeEta:
    case ErrorCode::LevelUnderflow:
    case ErrorCode::InvalidLevel:
    case ErrorCode::InvalidConfig:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace dosetrend

#include "late/error.h"

namespace late {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kZeroComplianceEffect: return "ZeroComplianceEffect";
    case ErrorCode::kDegenerateArm: return "DegenerateArm";
    case ErrorCode::kInsufficientDf: return "InsufficientDf";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kAllBlocksDropped: return "AllBlocksDropped";
    case ErrorCode::kMixedAssignmentInCluster: return "MixedAssignmentInCluster";
    case ErrorCode::kInconsistentWeightColumn: return "InconsistentWeightColumn";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonBinaryValue: return "NonBinaryValue";
    case ErrorCode::kMissingValue: return "MissingValue";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kEmptyArm: return "EmptyArm";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient:
    case ErrorCode::kZeroComplianceEffect:
    case ErrorCode::kInsufficientDf:
    case ErrorCode::kAllBlocksDropped:
      return true;
    default:
      return false;
  }
}

}  // namespace late

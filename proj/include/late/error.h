#ifndef LATE_ERROR_H_
#define LATE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace late {

enum class ErrorCode {
  kRankDeficient,
  kDomainError,
  kZeroComplianceEffect,
  kDegenerateArm,
  kInsufficientDf,
  kTooLarge,
  kAllBlocksDropped,
  kMixedAssignmentInCluster,
  kInconsistentWeightColumn,
  kMissingColumn,
  kNonBinaryValue,
  kMissingValue,
  kNonFiniteValue,
  kMalformedRow,
  kEmptyArm,
  kInvalidConfig,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Numerical failures (exit code 3) versus data / validation failures (2).
bool is_numerical(ErrorCode code);

class LateError : public std::runtime_error {
 public:
  LateError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const { return code_; }
  // Message without the error-code prefix.
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// Error raised while ingesting tabular data; carries the 1-based data row
// (0 when the error concerns the header) and the column name.
class DataError : public LateError {
 public:
  DataError(ErrorCode code, std::size_t row, std::string column,
            const std::string& message)
      : LateError(code, message), row_(row), column_(std::move(column)) {}

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace late

#endif  // LATE_ERROR_H_

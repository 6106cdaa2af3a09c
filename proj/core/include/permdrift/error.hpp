#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace permdrift {

enum class ErrorCode {
  DuplicatePermission,
  BadProtection,
  BadYears,
  SchemaMismatch,
  BadBit,
  BadLabel,
  LengthMismatch,
  TooFewSamples,
  MissingClass,
  EmptyFeatureSet,
  NonFiniteLoss,
  Empty,
  OutOfRange,
  BadSize,
  TooFewYears,
  ShapeMismatch,
  BadSchedule,
  IncompatibleSpec,
  IoFailure,
  BadConfig,
  BadModel,
};

std::string_view to_string(ErrorCode code) noexcept;

// Data-level failure. `row` is a 1-based line number for file errors, a
// 0-based sample index otherwise; `column` names the offending field.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> row = std::nullopt,
        std::optional<std::string> column = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::int64_t>& row() const noexcept { return row_; }
  const std::optional<std::string>& column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> row_;
  std::optional<std::string> column_;
};

}  // namespace permdrift

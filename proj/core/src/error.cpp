#include "permdrift/error.hpp"

namespace permdrift {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicatePermission: return "DuplicatePermission";
    case ErrorCode::BadProtection: return "BadProtection";
    case ErrorCode::BadYears: return "BadYears";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BadBit: return "BadBit";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadSize: return "BadSize";
    case ErrorCode::TooFewYears: return "TooFewYears";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadSchedule: return "BadSchedule";
    case ErrorCode::IncompatibleSpec: return "IncompatibleSpec";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadModel: return "BadModel";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     const std::optional<std::int64_t>& row,
                     const std::optional<std::string>& column) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  if (row) out += " (row " + std::to_string(*row) + ")";
  if (column) out += " (column " + *column + ")";
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::int64_t> row, std::optional<std::string> column)
    : std::runtime_error(decorate(code, message, row, column)),
      code_(code),
      row_(row),
      column_(std::move(column)) {}

}  // namespace permdrift

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pesem {

enum class ErrorCode {
  NotPe,
  Truncated,
  Unsupported,
  UnmappedRva,
  EmptyEnsemble,
  NonPositiveWeight,
  SchemaError,
  DuplicateRuleId,
  ClassTooSmall,
  DegenerateData,
  LengthMismatch,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above, so
/// callers (the CLI, the Python bindings) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pesem

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ohio {

enum class ErrorCode {
  InvalidArgument,
  DimMismatch,
  NonConsecutiveTime,
  NonFiniteValue,
  ZeroReference,
  InvalidDistribution,
  SingularInnerMatrix,
  IndexOutOfHorizon,
  NonFiniteJacobian,
  NonFiniteGradient,
  NonFiniteLoss,
  NumericalBreakdown,
  FlowExceedsInventory,
  InfeasibleReconstruction,
  InvalidConfig,
  ActionOutOfBounds,
  ConstraintViolation,
  MissingRewardSource,
  EmptyOutput,
  EmptyDataset,
  IoError,
  ParseError,
  IncompatibleModel,
  Usage,
};

std::string_view to_string(ErrorCode code);

// Process exit category: 1 usage (including bad configuration), 2 data error, 3 numeric failure.
int exit_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Warning sink. Defaults to stderr; tests and the C API silence or capture it.
using WarningHandler = void (*)(const std::string& message);
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace ohio

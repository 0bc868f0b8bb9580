#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sensorpen {

enum class ErrorCode {
  // sensor_model
  EmptyTrace,
  BadRate,
  // wfdb
  MalformedHeader,
  UnsupportedFormat,
  MalformedAnnotation,
  ChannelNotFound,
  // ecg pipeline
  NonIntegerStride,
  NonFinite,
  WindowTooLarge,
  EmptyQuery,
  // qrs
  SignalTooShort,
  // prompts
  UnknownScheme,
  MissingPlaceholder,
  ExtraField,
  // llm backend
  RateLimited,
  AuthFailed,
  Timeout,
  ReplayMiss,
  BackendFailure,
  // metrics
  EmptyEval,
  LengthMismatch,
  NoInformativeInstances,
  AllHallucinated,
  // general
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> error_code_from_string(std::string_view name) noexcept;

// True for errors raised by the completion backend (CLI exit code 3).
bool is_backend_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sensorpen

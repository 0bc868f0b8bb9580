#include "sensorpen/error.hpp"

namespace sensorpen {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedAnnotation: return "MalformedAnnotation";
    case ErrorCode::ChannelNotFound: return "ChannelNotFound";
    case ErrorCode::NonIntegerStride: return "NonIntegerStride";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::UnknownScheme: return "UnknownScheme";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::ExtraField: return "ExtraField";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::EmptyEval: return "EmptyEval";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoInformativeInstances: return "NoInformativeInstances";
    case ErrorCode::AllHallucinated: return "AllHallucinated";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Io); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

bool is_backend_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RateLimited:
    case ErrorCode::AuthFailed:
    case ErrorCode::Timeout:
    case ErrorCode::ReplayMiss:
    case ErrorCode::BackendFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace sensorpen

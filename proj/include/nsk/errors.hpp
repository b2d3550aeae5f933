#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nsk {

enum class ErrorCode {
  OutOfAdmissibleRange,
  NonZeroMean,
  ZeroModeSingular,
  BoxTooSmall,
  DerivativeBudgetExceeded,
  DecompositionMismatch,
  InnerLoopDiverged,
  NotContracting,
  CFLViolation,
  BlowUpDetected,
  InvalidArgument,
  ConfigError,
  IoError,
};

inline std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::OutOfAdmissibleRange: return "OutOfAdmissibleRange";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::ZeroModeSingular: return "ZeroModeSingular";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::DerivativeBudgetExceeded: return "DerivativeBudgetExceeded";
    case ErrorCode::DecompositionMismatch: return "DecompositionMismatch";
    case ErrorCode::InnerLoopDiverged: return "InnerLoopDiverged";
    case ErrorCode::NotContracting: return "NotContracting";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::BlowUpDetected: return "BlowUpDetected";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every library failure carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace nsk

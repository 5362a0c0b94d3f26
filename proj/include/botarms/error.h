#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace botarms {

enum class ErrorCode {
  kParse,
  kIntegrity,
  kNotFound,
  kConflict,
  kInvalidArgument,
  kDegenerateInput,
  kInsufficientData,
  kTransport,
  kCacheIntegrity,
  kReplayMiss,
  kUnparseableLabel,
  kRewriteFailed,
  kSuggestionFailed,
  kJudgeFailed,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; callers branch on
// code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by completion backends. Transient failures (timeouts, 429, 5xx) are
// retried by the gateway; permanent ones are not.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool transient)
      : Error(ErrorCode::kTransport, message), transient_(transient) {}

  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

}  // namespace botarms

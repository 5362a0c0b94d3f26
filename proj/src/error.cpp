#include "botarms/error.h"

namespace botarms {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kCacheIntegrity: return "cache-integrity";
    case ErrorCode::kReplayMiss: return "replay-miss";
    case ErrorCode::kUnparseableLabel: return "unparseable-label";
    case ErrorCode::kRewriteFailed: return "rewrite-failed";
    case ErrorCode::kSuggestionFailed: return "suggestion-failed";
    case ErrorCode::kJudgeFailed: return "judge-failed";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace botarms

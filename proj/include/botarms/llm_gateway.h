#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace botarms {

inline constexpr double kDefaultTemperature = 0.1;
inline constexpr int kLabelMaxTokens = 16;
inline constexpr int kRewriteMaxTokens = 512;

struct CompletionRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;
  int max_tokens = kLabelMaxTokens;
  bool want_token_probs = false;
  std::string backend;
};

struct Completion {
  std::string text;
  // Probability of the first generated token. Present only when requested and
  // the backend reports it.
  std::optional<double> first_token_prob;
  std::string backend;
  bool cache_hit = false;
  double latency_ms = 0.0;
  std::string cache_key;
};

struct BackendReply {
  std::string text;
  std::optional<double> first_token_prob;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // May throw TransportError; must be safe for concurrent callers.
  virtual BackendReply complete(const CompletionRequest& request) = 0;
  virtual bool supports_token_probs() const { return false; }
};

// Wraps a callable; used by tests and embedding programs that script replies.
class ScriptedBackend final : public CompletionBackend {
 public:
  using Fn = std::function<BackendReply(const CompletionRequest&)>;
  explicit ScriptedBackend(Fn fn, bool token_probs = false)
      : fn_(std::move(fn)), token_probs_(token_probs) {}

  BackendReply complete(const CompletionRequest& request) override {
    std::lock_guard lock(mu_);
    return fn_(request);
  }
  bool supports_token_probs() const override { return token_probs_; }

 private:
  std::mutex mu_;
  Fn fn_;
  bool token_probs_;
};

// live: backends are called, results memoized in memory only.
// record: the cache file is loaded if present and every miss is appended.
// replay: the cache file is the only source; a miss is a hard error.
enum class CacheMode { kLive, kRecord, kReplay };

std::optional<CacheMode> cache_mode_from_string(std::string_view name);
std::string_view to_string(CacheMode mode);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
  std::chrono::milliseconds max_delay{2000};
};

// Single entry point for every LLM call. Requests are keyed by
// sha256(backend, prompt, temperature, max_tokens); identical requests are
// answered from the cache. Thread-safe; cache appends are serialized.
class LlmGateway {
 public:
  LlmGateway(CacheMode mode, std::optional<std::filesystem::path> cache_file,
             RetryPolicy retry = {});
  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  // max_requests_per_second <= 0 disables rate limiting.
  void register_backend(const std::string& tag,
                        std::shared_ptr<CompletionBackend> backend,
                        double max_requests_per_second = 0.0);
  bool has_backend(std::string_view tag) const;

  Completion complete(const CompletionRequest& request);

  CacheMode mode() const { return mode_; }
  std::size_t backend_calls() const;
  std::size_t cache_hits() const;
  std::size_t cache_size() const;

  static std::string cache_key(const CompletionRequest& request);

 private:
  struct Stored {
    BackendReply reply;
    double latency_ms = 0.0;
  };
  struct BackendSlot {
    std::shared_ptr<CompletionBackend> backend;
    std::chrono::nanoseconds min_interval{0};
    std::mutex pacing_mu;
    std::chrono::steady_clock::time_point next_slot{};
  };

  void load_cache();
  BackendReply call_with_retry(BackendSlot& slot,
                               const CompletionRequest& request);

  CacheMode mode_;
  std::optional<std::filesystem::path> cache_file_;
  RetryPolicy retry_;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<BackendSlot>, std::less<>> backends_;
  std::unordered_map<std::string, Stored> cache_;
  std::ofstream cache_out_;
  std::size_t backend_calls_ = 0;
  std::size_t cache_hits_ = 0;
};

}  // namespace botarms

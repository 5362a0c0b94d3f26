#include "botarms/llm_gateway.h"

#include <algorithm>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"
#include "botarms/io_util.h"

namespace botarms {

using json = nlohmann::json;

std::optional<CacheMode> cache_mode_from_string(std::string_view name) {
  if (name == "live") return CacheMode::kLive;
  if (name == "record") return CacheMode::kRecord;
  if (name == "replay") return CacheMode::kReplay;
  return std::nullopt;
}

std::string_view to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::kLive: return "live";
    case CacheMode::kRecord: return "record";
    case CacheMode::kReplay: return "replay";
  }
  return "live";
}

namespace {

json request_json(const CompletionRequest& request) {
  return json{{"backend", request.backend},
              {"prompt", request.prompt},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

}  // namespace

std::string LlmGateway::cache_key(const CompletionRequest& request) {
  // json objects serialize with sorted keys, so the dump is canonical.
  return sha256_hex(request_json(request).dump());
}

LlmGateway::LlmGateway(CacheMode mode,
                       std::optional<std::filesystem::path> cache_file,
                       RetryPolicy retry)
    : mode_(mode), cache_file_(std::move(cache_file)), retry_(retry) {
  if (mode_ != CacheMode::kLive && !cache_file_) {
    throw Error(ErrorCode::kConfig,
                fmt::format("{} mode requires a cache file", to_string(mode_)));
  }
  if (mode_ == CacheMode::kLive) return;
  if (std::filesystem::exists(*cache_file_)) {
    load_cache();
  } else if (mode_ == CacheMode::kReplay) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("replay cache {} does not exist",
                            cache_file_->string()));
  }
  if (mode_ == CacheMode::kRecord) {
    if (cache_file_->has_parent_path()) {
      std::filesystem::create_directories(cache_file_->parent_path());
    }
    cache_out_.open(*cache_file_, std::ios::binary | std::ios::app);
    if (!cache_out_) {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("cannot append to cache {}",
                              cache_file_->string()));
    }
  }
}

void LlmGateway::load_cache() {
  std::ifstream in(*cache_file_, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("cannot open cache {}", cache_file_->string()));
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json record = json::parse(line);
      CompletionRequest request;
      const json& r = record.at("request");
      request.backend = r.at("backend").get<std::string>();
      request.prompt = r.at("prompt").get<std::string>();
      request.temperature = r.at("temperature").get<double>();
      request.max_tokens = r.at("max_tokens").get<int>();
      const auto key = record.at("key").get<std::string>();
      if (key != cache_key(request)) {
        throw Error(ErrorCode::kCacheIntegrity,
                    fmt::format("key does not match request hash"));
      }
      const json& c = record.at("completion");
      Stored stored;
      stored.reply.text = c.at("text").get<std::string>();
      if (c.contains("first_token_prob") && !c.at("first_token_prob").is_null()) {
        stored.reply.first_token_prob = c.at("first_token_prob").get<double>();
      }
      stored.latency_ms = c.value("latency_ms", 0.0);
      cache_.emplace(key, std::move(stored));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCacheIntegrity,
                  fmt::format("cache {} line {}: {}", cache_file_->string(),
                              line_no, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCacheIntegrity,
                  fmt::format("cache {} line {}: {}", cache_file_->string(),
                              line_no, e.what()));
    }
  }
}

void LlmGateway::register_backend(const std::string& tag,
                                  std::shared_ptr<CompletionBackend> backend,
                                  double max_requests_per_second) {
  auto slot = std::make_unique<BackendSlot>();
  slot->backend = std::move(backend);
  if (max_requests_per_second > 0.0) {
    slot->min_interval = std::chrono::nanoseconds(
        static_cast<std::int64_t>(1e9 / max_requests_per_second));
  }
  std::lock_guard lock(mu_);
  backends_[tag] = std::move(slot);
}

bool LlmGateway::has_backend(std::string_view tag) const {
  std::lock_guard lock(mu_);
  return backends_.find(tag) != backends_.end();
}

BackendReply LlmGateway::call_with_retry(BackendSlot& slot,
                                         const CompletionRequest& request) {
  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, retry_.attempts); ++attempt) {
    if (slot.min_interval.count() > 0) {
      std::unique_lock pacing(slot.pacing_mu);
      auto now = std::chrono::steady_clock::now();
      if (slot.next_slot > now) std::this_thread::sleep_until(slot.next_slot);
      slot.next_slot =
          std::max(now, slot.next_slot) +
          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              slot.min_interval);
    }
    try {
      return slot.backend->complete(request);
    } catch (const TransportError& e) {
      if (!e.transient()) throw;
      last_error = e.what();
    }
    if (attempt + 1 < retry_.attempts) {
      const std::chrono::milliseconds delay = retry_.base_delay * (1 << attempt);
      std::this_thread::sleep_for(std::min(delay, retry_.max_delay));
    }
  }
  throw TransportError(
      fmt::format("backend {} failed after {} attempts: {}", request.backend,
                  retry_.attempts, last_error),
      false);
}

Completion LlmGateway::complete(const CompletionRequest& request) {
  if (request.prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "completion prompt is empty");
  }
  if (request.max_tokens <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  }
  if (request.temperature < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  const std::string key = cache_key(request);
  auto to_completion = [&](const Stored& stored, bool hit) {
    Completion c;
    c.text = stored.reply.text;
    if (request.want_token_probs) c.first_token_prob = stored.reply.first_token_prob;
    c.backend = request.backend;
    c.cache_hit = hit;
    c.latency_ms = stored.latency_ms;
    c.cache_key = key;
    return c;
  };

  BackendSlot* slot = nullptr;
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++cache_hits_;
      return to_completion(it->second, true);
    }
    if (mode_ == CacheMode::kReplay) {
      throw Error(ErrorCode::kReplayMiss,
                  fmt::format("replay cache has no entry for request {} "
                              "(backend {})",
                              key.substr(0, 12), request.backend));
    }
    auto it = backends_.find(request.backend);
    if (it == backends_.end()) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("unknown backend \"{}\"", request.backend));
    }
    slot = it->second.get();
    ++backend_calls_;
  }

  const auto start = std::chrono::steady_clock::now();
  Stored stored;
  stored.reply = call_with_retry(*slot, request);
  if (stored.reply.first_token_prob) {
    const double p = *stored.reply.first_token_prob;
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kTransport,
                  fmt::format("backend {} returned token probability {}",
                              request.backend, p));
    }
  }
  stored.latency_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();

  std::lock_guard lock(mu_);
  auto [it, inserted] = cache_.emplace(key, stored);
  if (inserted && mode_ == CacheMode::kRecord) {
    json record;
    record["key"] = key;
    record["request"] = request_json(request);
    record["completion"] = {
        {"text", stored.reply.text},
        {"first_token_prob", stored.reply.first_token_prob
                                 ? json(*stored.reply.first_token_prob)
                                 : json(nullptr)},
        {"latency_ms", stored.latency_ms}};
    cache_out_ << record.dump() << '\n';
    cache_out_.flush();
  }
  return to_completion(it->second, false);
}

std::size_t LlmGateway::backend_calls() const {
  std::lock_guard lock(mu_);
  return backend_calls_;
}

std::size_t LlmGateway::cache_hits() const {
  std::lock_guard lock(mu_);
  return cache_hits_;
}

std::size_t LlmGateway::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

}  // namespace botarms

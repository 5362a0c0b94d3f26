#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "botarms/linearize.h"
#include "botarms/llm_gateway.h"
#include "botarms/scorer.h"

namespace botarms {

// Base URL plus path, e.g. "https://api.openai.com/v1/completions".
struct HttpEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

HttpEndpoint parse_endpoint(const std::string& url);

struct HttpServiceConfig {
  std::string endpoint;
  std::string model;
  // Name of the environment variable holding a bearer token. Empty: no auth.
  std::string api_key_env;
  int timeout_seconds = 60;
};

// OpenAI-compatible completion endpoint. With api "completions" the request
// carries {"model","prompt","temperature","max_tokens"[,"logprobs":1]}; with
// "chat" it carries a single user message and "logprobs": true. First-token
// probability is exp(logprob of the first generated token).
class HttpCompletionBackend final : public CompletionBackend {
 public:
  enum class Api { kCompletions, kChat };

  HttpCompletionBackend(HttpServiceConfig config, Api api);
  static std::unique_ptr<HttpCompletionBackend> from_json(
      const nlohmann::json& config);

  BackendReply complete(const CompletionRequest& request) override;
  bool supports_token_probs() const override { return true; }

 private:
  HttpServiceConfig config_;
  HttpEndpoint endpoint_;
  Api api_;
};

// POST {"model", "input"} -> {"data": [{"embedding": [...]}]}.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpServiceConfig config);
  EmbeddingVector embed(std::string_view text) const override;

 private:
  HttpServiceConfig config_;
  HttpEndpoint endpoint_;
};

// POST {"text"} -> {"score": p}, p in [0, 1].
class HttpScorer final : public BotScorer {
 public:
  explicit HttpScorer(HttpServiceConfig config);
  double score(std::string_view text) const override;

 private:
  HttpServiceConfig config_;
  HttpEndpoint endpoint_;
};

HttpServiceConfig http_service_config_from_json(const nlohmann::json& config);

}  // namespace botarms

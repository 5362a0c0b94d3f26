#include "botarms/http_services.h"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>

#include "botarms/error.h"

namespace botarms {

using json = nlohmann::json;

HttpEndpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig,
                fmt::format("endpoint \"{}\" has no scheme", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpServiceConfig http_service_config_from_json(const json& config) {
  HttpServiceConfig out;
  try {
    out.endpoint = config.at("endpoint").get<std::string>();
    out.model = config.value("model", std::string());
    out.api_key_env = config.value("api_key_env", std::string());
    out.timeout_seconds = config.value("timeout_seconds", 60);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig,
                fmt::format("malformed HTTP service config: {}", e.what()));
  }
  return out;
}

namespace {

// Sends a JSON POST and returns the parsed body. Connection failures, 429 and
// 5xx are transient.
json post_json(const HttpServiceConfig& config, const HttpEndpoint& endpoint,
               const json& body) {
  httplib::Client client(endpoint.base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw TransportError(
          fmt::format("environment variable {} is not set",
                      config.api_key_env),
          false);
    }
    headers.emplace("Authorization", fmt::format("Bearer {}", key));
  }
  auto result =
      client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!result) {
    throw TransportError(
        fmt::format("POST {}{} failed: {}", endpoint.base, endpoint.path,
                    httplib::to_string(result.error())),
        true);
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw TransportError(fmt::format("POST {}{} returned HTTP {}",
                                     endpoint.base, endpoint.path, status),
                         true);
  }
  if (status < 200 || status >= 300) {
    throw TransportError(fmt::format("POST {}{} returned HTTP {}: {}",
                                     endpoint.base, endpoint.path, status,
                                     result->body.substr(0, 200)),
                         false);
  }
  try {
    return json::parse(result->body);
  } catch (const json::exception& e) {
    throw TransportError(
        fmt::format("unparseable response from {}: {}", endpoint.base,
                    e.what()),
        false);
  }
}

}  // namespace

HttpCompletionBackend::HttpCompletionBackend(HttpServiceConfig config, Api api)
    : config_(std::move(config)),
      endpoint_(parse_endpoint(config_.endpoint)),
      api_(api) {}

std::unique_ptr<HttpCompletionBackend> HttpCompletionBackend::from_json(
    const json& config) {
  const auto api_name = config.value("api", std::string("completions"));
  Api api;
  if (api_name == "completions") {
    api = Api::kCompletions;
  } else if (api_name == "chat") {
    api = Api::kChat;
  } else {
    throw Error(ErrorCode::kConfig,
                fmt::format("unknown HTTP completion api \"{}\"", api_name));
  }
  return std::make_unique<HttpCompletionBackend>(
      http_service_config_from_json(config), api);
}

BackendReply HttpCompletionBackend::complete(const CompletionRequest& request) {
  json body{{"model", config_.model},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  if (api_ == Api::kCompletions) {
    body["prompt"] = request.prompt;
    if (request.want_token_probs) body["logprobs"] = 1;
  } else {
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    if (request.want_token_probs) body["logprobs"] = true;
  }
  const json response = post_json(config_, endpoint_, body);
  try {
    const json& choice = response.at("choices").at(0);
    BackendReply reply;
    std::optional<double> logprob;
    if (api_ == Api::kCompletions) {
      reply.text = choice.at("text").get<std::string>();
      if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
          choice["logprobs"].contains("token_logprobs") &&
          !choice["logprobs"]["token_logprobs"].empty() &&
          choice["logprobs"]["token_logprobs"][0].is_number()) {
        logprob = choice["logprobs"]["token_logprobs"][0].get<double>();
      }
    } else {
      reply.text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
          choice["logprobs"].contains("content") &&
          choice["logprobs"]["content"].is_array() &&
          !choice["logprobs"]["content"].empty()) {
        logprob = choice["logprobs"]["content"][0].at("logprob").get<double>();
      }
    }
    if (request.want_token_probs && logprob) {
      reply.first_token_prob = std::exp(*logprob);
    }
    return reply;
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed completion response: {}",
                                     e.what()),
                         false);
  }
}

HttpEmbedder::HttpEmbedder(HttpServiceConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  const json response = post_json(
      config_, endpoint_, json{{"model", config_.model}, {"input", text}});
  try {
    EmbeddingVector v;
    v.values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.values.empty()) {
      throw Error(ErrorCode::kDegenerateInput, "embedding service returned an empty vector");
    }
    return v;
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed embedding response: {}",
                                     e.what()),
                         false);
  }
}

HttpScorer::HttpScorer(HttpServiceConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {}

double HttpScorer::score(std::string_view text) const {
  const json response = post_json(config_, endpoint_, json{{"text", text}});
  double p;
  try {
    p = response.at("score").get<double>();
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed scorer response: {}", e.what()),
                         false);
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kDegenerateInput,
                fmt::format("scorer returned {} outside [0,1]", p));
  }
  return p;
}

}  // namespace botarms

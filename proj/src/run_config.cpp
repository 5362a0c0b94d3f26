#include "botarms/run_config.h"

#include <fmt/format.h>

#include "botarms/error.h"
#include "botarms/http_services.h"
#include "botarms/io_util.h"
#include "botarms/mock_backend.h"
#include "botarms/parallel.h"
#include "botarms/synthetic.h"

namespace botarms {

using json = nlohmann::json;

namespace {

json table(const json& config, const char* key) {
  if (!config.contains(key)) return json::object();
  const json& t = config.at(key);
  if (!t.is_object()) {
    throw Error(ErrorCode::kConfig, fmt::format("\"{}\" must be an object", key));
  }
  for (const auto& [tag, entry] : t.items()) {
    if (!entry.is_object() || !entry.contains("type")) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("{} entry \"{}\" needs a \"type\"", key, tag));
    }
  }
  return t;
}

}  // namespace

RunConfig run_config_from_json(const json& config) {
  if (!config.is_object()) {
    throw Error(ErrorCode::kConfig, "run config must be a JSON object");
  }
  RunConfig out;
  try {
    if (config.contains("dataset")) {
      out.dataset = config.at("dataset").get<std::string>();
    }
    if (config.contains("seed")) out.seed = config.at("seed").get<std::uint64_t>();
    if (config.contains("mode")) {
      const auto name = config.at("mode").get<std::string>();
      auto mode = cache_mode_from_string(name);
      if (!mode) {
        throw Error(ErrorCode::kConfig, fmt::format("unknown mode \"{}\"", name));
      }
      out.mode = *mode;
    }
    if (config.contains("cache")) out.cache = config.at("cache").get<std::string>();
    out.icl_count = config.value("icl_count", out.icl_count);
    if (config.contains("retrieval_count")) {
      out.retrieval_count = config.at("retrieval_count").get<std::size_t>();
    }
    out.temperature = config.value("temperature", out.temperature);
    out.iterations = config.value("iterations", out.iterations);
    if (config.contains("selection")) {
      const auto name = config.at("selection").get<std::string>();
      if (name == "min") {
        out.selection = GuidanceSelection::kMinScore;
      } else if (name == "last") {
        out.selection = GuidanceSelection::kLast;
      } else {
        throw Error(ErrorCode::kConfig,
                    fmt::format("unknown selection \"{}\"", name));
      }
    }
    out.text_posts = config.value("text_posts", out.text_posts);
    out.label_max_tokens = config.value("label_max_tokens", out.label_max_tokens);
    out.rewrite_max_tokens =
        config.value("rewrite_max_tokens", out.rewrite_max_tokens);
    if (config.contains("workers")) {
      out.workers = config.at("workers").get<std::size_t>();
    }
    out.backends = table(config, "backends");
    out.embedders = table(config, "embedders");
    out.scorers = table(config, "scorers");
    if (config.contains("roles")) {
      out.roles = config.at("roles").get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, fmt::format("malformed run config: {}", e.what()));
  }
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  try {
    return run_config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig,
                fmt::format("config {}: {}", path.string(), e.what()));
  }
}

std::string resolve_role(const RunConfig& config, std::string_view role) {
  if (auto it = config.roles.find(std::string(role)); it != config.roles.end()) {
    return it->second;
  }
  const json& t = role == "embedder" ? config.embedders
                  : role == "scorer" ? config.scorers
                                     : config.backends;
  if (t.size() == 1) return t.begin().key();
  return {};
}

std::uint64_t require_seed(const RunConfig& config) {
  if (!config.seed) {
    throw Error(ErrorCode::kConfig, "a seed is required (--seed or \"seed\")");
  }
  return *config.seed;
}

std::size_t effective_workers(const RunConfig& config) {
  return std::max<std::size_t>(1, config.workers.value_or(default_workers()));
}

namespace {

const json& entry_for(const json& t, const std::string& tag,
                      std::string_view kind) {
  if (!t.contains(tag)) {
    throw Error(ErrorCode::kConfig,
                fmt::format("no {} named \"{}\" is configured", kind, tag));
  }
  return t.at(tag);
}

std::unique_ptr<Embedder> make_embedder(const json& entry, CacheMode mode,
                                        const std::string& tag) {
  const auto type = entry.at("type").get<std::string>();
  if (type == "hashed") {
    return std::make_unique<HashedBagOfWordsEmbedder>(
        entry.value("dim", std::size_t{256}));
  }
  if (type == "http") {
    if (mode == CacheMode::kReplay) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("embedder \"{}\" needs the network, which replay "
                              "mode forbids",
                              tag));
    }
    return std::make_unique<HttpEmbedder>(http_service_config_from_json(entry));
  }
  throw Error(ErrorCode::kConfig,
              fmt::format("unknown embedder type \"{}\"", type));
}

std::unique_ptr<BotScorer> make_scorer(const json& entry, CacheMode mode,
                                       const std::string& tag) {
  const auto type = entry.at("type").get<std::string>();
  if (type == "lexicon") {
    return std::make_unique<LexiconScorer>(
        entry.at("lexicon").get<std::vector<std::string>>());
  }
  if (type == "planted_lexicon") {
    return std::make_unique<LexiconScorer>(planted_bot_lexicon());
  }
  if (type == "http") {
    if (mode == CacheMode::kReplay) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("scorer \"{}\" needs the network, which replay "
                              "mode forbids",
                              tag));
    }
    return std::make_unique<HttpScorer>(http_service_config_from_json(entry));
  }
  throw Error(ErrorCode::kConfig, fmt::format("unknown scorer type \"{}\"", type));
}

}  // namespace

Services build_services(const RunConfig& config, bool need_scorer) {
  Services s;
  if (config.mode != CacheMode::kLive && !config.cache) {
    throw Error(ErrorCode::kConfig,
                fmt::format("{} mode needs a cache path", to_string(config.mode)));
  }
  try {
    s.gateway = std::make_unique<LlmGateway>(config.mode, config.cache);
    if (config.mode != CacheMode::kReplay) {
      for (const auto& [tag, entry] : config.backends.items()) {
        const auto type = entry.at("type").get<std::string>();
        std::shared_ptr<CompletionBackend> backend;
        if (type == "mock") {
          backend = std::make_shared<MockBackend>(MockBackend::from_json(entry));
        } else if (type == "http") {
          backend = HttpCompletionBackend::from_json(entry);
        } else {
          throw Error(ErrorCode::kConfig,
                      fmt::format("unknown backend type \"{}\"", type));
        }
        s.gateway->register_backend(tag, std::move(backend),
                                    entry.value("max_rps", 0.0));
      }
    }
    const std::string embedder_tag = resolve_role(config, "embedder");
    if (embedder_tag.empty()) {
      s.embedder = std::make_unique<HashedBagOfWordsEmbedder>();
    } else {
      s.embedder = make_embedder(entry_for(config.embedders, embedder_tag,
                                           "embedder"),
                                 config.mode, embedder_tag);
    }
    if (need_scorer) {
      const std::string scorer_tag = resolve_role(config, "scorer");
      if (scorer_tag.empty()) {
        throw Error(ErrorCode::kConfig, "no scorer is configured");
      }
      s.scorer = make_scorer(entry_for(config.scorers, scorer_tag, "scorer"),
                             config.mode, scorer_tag);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, fmt::format("malformed service config: {}", e.what()));
  }
  return s;
}

namespace {

std::string backend_for(const RunConfig& config, std::string_view role) {
  std::string tag = resolve_role(config, role);
  if (tag.empty()) {
    throw Error(ErrorCode::kConfig,
                fmt::format("no backend for role \"{}\"; set roles.{}", role,
                            role));
  }
  return tag;
}

}  // namespace

DetectorSettings detector_settings(const RunConfig& config) {
  DetectorSettings s;
  s.icl_count = config.icl_count;
  s.retrieval_count = config.retrieval_count;
  s.text_posts = config.text_posts;
  s.seed = require_seed(config);
  s.backend = backend_for(config, "detector");
  s.temperature = config.temperature;
  s.max_tokens = config.label_max_tokens;
  return s;
}

AttackSettings attack_settings(const RunConfig& config) {
  AttackSettings s;
  s.backend = backend_for(config, "attacker");
  s.temperature = config.temperature;
  s.max_tokens = config.rewrite_max_tokens;
  s.choice_max_tokens = config.label_max_tokens;
  s.retrieval_count = config.retrieval_count.value_or(config.icl_count);
  s.iterations = config.iterations;
  s.selection = config.selection;
  s.seed = require_seed(config);
  return s;
}

JudgeSettings judge_settings(const RunConfig& config) {
  JudgeSettings s;
  s.backend = backend_for(config, "judge");
  s.temperature = config.temperature;
  s.max_tokens = config.label_max_tokens;
  return s;
}

}  // namespace botarms

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "botarms/detectors.h"
#include "botarms/evaluate.h"
#include "botarms/linearize.h"
#include "botarms/llm_gateway.h"
#include "botarms/manipulate.h"
#include "botarms/scorer.h"

namespace botarms {

// Everything a command needs besides its own flags. Loaded from a JSON file,
// then overridden field by field from the command line.
//
//   {"dataset": "data.jsonl", "seed": 7, "mode": "record", "cache": "c.jsonl",
//    "icl_count": 16, "retrieval_count": 16, "temperature": 0.1,
//    "iterations": 5, "selection": "min"|"last", "text_posts": 4,
//    "label_max_tokens": 16, "rewrite_max_tokens": 512, "workers": 4,
//    "backends": {"tag": {"type": "mock", ...} | {"type": "http", ...}},
//    "embedders": {"tag": {"type": "hashed", "dim": 256} | {"type": "http"}},
//    "scorers": {"tag": {"type": "lexicon", "lexicon": [...]}
//                      | {"type": "planted_lexicon"} | {"type": "http"}},
//    "roles": {"detector": "tag", "attacker": "tag", "judge": "tag",
//              "embedder": "tag", "scorer": "tag"}}
//
// A role left unset resolves to the only entry of its table when exactly one
// exists. Relative paths are taken relative to the working directory.
struct RunConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<std::uint64_t> seed;
  CacheMode mode = CacheMode::kLive;
  std::optional<std::filesystem::path> cache;
  std::size_t icl_count = 16;
  std::optional<std::size_t> retrieval_count;
  double temperature = kDefaultTemperature;
  int iterations = 5;
  GuidanceSelection selection = GuidanceSelection::kMinScore;
  std::size_t text_posts = 4;
  int label_max_tokens = kLabelMaxTokens;
  int rewrite_max_tokens = kRewriteMaxTokens;
  std::optional<std::size_t> workers;

  nlohmann::json backends = nlohmann::json::object();
  nlohmann::json embedders = nlohmann::json::object();
  nlohmann::json scorers = nlohmann::json::object();
  std::map<std::string, std::string> roles;
};

// Throws kConfig on malformed input.
RunConfig run_config_from_json(const nlohmann::json& config);
RunConfig load_run_config(const std::filesystem::path& path);

// Resolved tag for a role ("detector", "attacker", "judge") over the backend
// table, or "embedder"/"scorer" over theirs. Empty when unresolvable.
std::string resolve_role(const RunConfig& config, std::string_view role);

std::uint64_t require_seed(const RunConfig& config);
std::size_t effective_workers(const RunConfig& config);

struct Services {
  std::unique_ptr<LlmGateway> gateway;
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<BotScorer> scorer;
};

// Builds the gateway with every configured backend. In replay mode no
// completion backend is registered and network embedders or scorers are
// rejected (kConfig). The embedder defaults to hashed bag-of-words when none
// is configured; the scorer is only built when requested.
Services build_services(const RunConfig& config, bool need_scorer);

DetectorSettings detector_settings(const RunConfig& config);
AttackSettings attack_settings(const RunConfig& config);
JudgeSettings judge_settings(const RunConfig& config);

}  // namespace botarms

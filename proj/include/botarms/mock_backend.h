#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botarms/llm_gateway.h"

namespace botarms {

// One row of the mock's rule table. The first rule whose pattern matches wins.
struct MockRule {
  enum class Scope {
    kPrompt,  // match against the whole prompt
    kTail,    // match against the text after the last occurrence of `anchor`
  };

  std::string pattern;  // ECMAScript regex
  Scope scope = Scope::kPrompt;
  std::string anchor = "\n\n";
  bool ignore_case = false;
  // "{0}" expands to the whole match, "{1}".."{9}" to capture groups.
  std::string reply;
  std::optional<double> first_token_prob;
};

// Deterministic rule-table backend. It never reads the clock or any global
// random state: a reply is a pure function of the prompt.
//
// JSON form:
//   {"type": "mock",
//    "rules": [{"pattern": "...", "scope": "prompt"|"tail", "anchor": "\n\n",
//               "ignore_case": false, "reply": "...", "prob": 0.9}, ...],
//    "default_reply": "human", "default_prob": 0.5}
class MockBackend final : public CompletionBackend {
 public:
  MockBackend(std::vector<MockRule> rules,
              std::optional<std::string> default_reply = std::nullopt,
              std::optional<double> default_prob = std::nullopt);

  static MockBackend from_json(const nlohmann::json& config);

  BackendReply complete(const CompletionRequest& request) override;
  bool supports_token_probs() const override { return true; }

 private:
  struct Compiled {
    MockRule rule;
    std::regex regex;
  };
  std::vector<Compiled> rules_;
  std::optional<std::string> default_reply_;
  std::optional<double> default_prob_;
};

}  // namespace botarms

#include "botarms/mock_backend.h"

#include <fmt/format.h>

#include "botarms/error.h"

namespace botarms {

MockBackend::MockBackend(std::vector<MockRule> rules,
                         std::optional<std::string> default_reply,
                         std::optional<double> default_prob)
    : default_reply_(std::move(default_reply)), default_prob_(default_prob) {
  for (auto& rule : rules) {
    auto flags = std::regex::ECMAScript;
    if (rule.ignore_case) flags |= std::regex::icase;
    try {
      std::regex regex(rule.pattern, flags);
      rules_.push_back({std::move(rule), std::move(regex)});
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("mock rule pattern \"{}\": {}", rule.pattern,
                              e.what()));
    }
  }
}

MockBackend MockBackend::from_json(const nlohmann::json& config) {
  std::vector<MockRule> rules;
  try {
    for (const auto& r : config.value("rules", nlohmann::json::array())) {
      MockRule rule;
      rule.pattern = r.at("pattern").get<std::string>();
      const auto scope = r.value("scope", std::string("prompt"));
      if (scope == "tail") {
        rule.scope = MockRule::Scope::kTail;
      } else if (scope != "prompt") {
        throw Error(ErrorCode::kConfig,
                    fmt::format("unknown mock rule scope \"{}\"", scope));
      }
      rule.anchor = r.value("anchor", std::string("\n\n"));
      rule.ignore_case = r.value("ignore_case", false);
      rule.reply = r.at("reply").get<std::string>();
      if (r.contains("prob")) rule.first_token_prob = r.at("prob").get<double>();
      rules.push_back(std::move(rule));
    }
    std::optional<std::string> default_reply;
    std::optional<double> default_prob;
    if (config.contains("default_reply")) {
      default_reply = config.at("default_reply").get<std::string>();
    }
    if (config.contains("default_prob")) {
      default_prob = config.at("default_prob").get<double>();
    }
    return MockBackend(std::move(rules), std::move(default_reply), default_prob);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig,
                fmt::format("malformed mock backend config: {}", e.what()));
  }
}

namespace {

std::string expand(const std::string& reply, const std::smatch& match) {
  std::string out;
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] == '{' && i + 2 < reply.size() && reply[i + 2] == '}' &&
        reply[i + 1] >= '0' && reply[i + 1] <= '9') {
      const auto group = static_cast<std::size_t>(reply[i + 1] - '0');
      if (group < match.size()) out += match[group].str();
      i += 2;
    } else {
      out += reply[i];
    }
  }
  return out;
}

}  // namespace

BackendReply MockBackend::complete(const CompletionRequest& request) {
  for (const auto& compiled : rules_) {
    const MockRule& rule = compiled.rule;
    std::string subject = request.prompt;
    if (rule.scope == MockRule::Scope::kTail) {
      const auto pos = request.prompt.rfind(rule.anchor);
      if (pos != std::string::npos) {
        subject = request.prompt.substr(pos + rule.anchor.size());
      }
    }
    std::smatch match;
    if (std::regex_search(subject, match, compiled.regex)) {
      return {expand(rule.reply, match), rule.first_token_prob};
    }
  }
  if (default_reply_) return {*default_reply_, default_prob_};
  throw Error(ErrorCode::kConfig, "no mock rule matched the prompt");
}

}  // namespace botarms

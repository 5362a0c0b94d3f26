#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace botarms {

// External bot-likelihood classifier f(text) -> [0, 1]; higher is more
// bot-like. Implementations must be deterministic and thread-safe.
class BotScorer {
 public:
  virtual ~BotScorer() = default;
  virtual double score(std::string_view text) const = 0;
};

// (hits + 1) / (tokens + 2), where hits counts tokens found in the lexicon.
// Strictly inside (0, 1).
class LexiconScorer final : public BotScorer {
 public:
  explicit LexiconScorer(const std::vector<std::string>& lexicon);
  double score(std::string_view text) const override;

 private:
  std::unordered_set<std::string> lexicon_;
};

}  // namespace botarms

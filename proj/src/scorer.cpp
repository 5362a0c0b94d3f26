#include "botarms/scorer.h"

#include "botarms/retrieval.h"

namespace botarms {

LexiconScorer::LexiconScorer(const std::vector<std::string>& lexicon) {
  for (const auto& word : lexicon) {
    for (auto& token : tokenize(word)) lexicon_.insert(std::move(token));
  }
}

double LexiconScorer::score(std::string_view text) const {
  const auto tokens = tokenize(text);
  std::size_t hits = 0;
  for (const auto& token : tokens) hits += lexicon_.count(token);
  return (static_cast<double>(hits) + 1.0) /
         (static_cast<double>(tokens.size()) + 2.0);
}

}  // namespace botarms

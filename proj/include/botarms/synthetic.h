#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botarms/dataset.h"

namespace botarms {

struct SyntheticConfig {
  std::size_t users = 0;
  double bot_fraction = 0.4;
  // Applied per class, so both classes are represented in train and test.
  double train_fraction = 0.5;
  std::size_t posts_per_user = 0;
  std::size_t follows_per_user = 3;
  // When set, bots and humans draw descriptions from disjoint vocabularies and
  // metadata from disjoint ranges (bots < 1000 followers, humans >= 1000).
  bool planted_signal = true;
};

// Vocabulary used for bot descriptions and posts under planted_signal.
const std::vector<std::string>& planted_bot_lexicon();
const std::vector<std::string>& planted_human_lexicon();

// Pure function of (config, seed). Exactly floor(users * bot_fraction) users
// are labeled bot.
SocialDataset generate_synthetic(const SyntheticConfig& config,
                                 std::uint64_t seed);

}  // namespace botarms

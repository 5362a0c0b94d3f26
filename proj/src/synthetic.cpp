#include "botarms/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "botarms/error.h"
#include "botarms/rng.h"

namespace botarms {

const std::vector<std::string>& planted_bot_lexicon() {
  static const std::vector<std::string> words = {
      "crypto", "giveaway", "airdrop", "followback", "promo",
      "bonus",  "jackpot",  "signals", "earn",       "nft"};
  return words;
}

const std::vector<std::string>& planted_human_lexicon() {
  static const std::vector<std::string> words = {
      "coffee", "hiking", "family", "teacher", "books",  "garden",
      "music",  "runner", "travel", "cooking", "nurse",  "painter"};
  return words;
}

namespace {

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words = {
      "daily", "life", "world", "news", "love", "today", "city", "fan"};
  return words;
}

std::int64_t draw(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(
                  rng.below(static_cast<std::uint64_t>(hi - lo)));
}

std::string sentence(Rng& rng, const std::vector<std::string>& vocab) {
  const std::size_t signal = 3 + rng.below(4);
  const std::size_t filler = 1 + rng.below(2);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < signal; ++i) {
    words.push_back(vocab[rng.below(vocab.size())]);
  }
  for (std::size_t i = 0; i < filler; ++i) {
    words.push_back(neutral_words()[rng.below(neutral_words().size())]);
  }
  rng.shuffle(std::span<std::string>(words));
  return fmt::format("{}", fmt::join(words, " "));
}

std::size_t floor_count(std::size_t n, double fraction) {
  // The epsilon absorbs representation error, e.g. 100 * 0.29.
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

SocialDataset generate_synthetic(const SyntheticConfig& config,
                                 std::uint64_t seed) {
  if (!(config.bot_fraction >= 0.0 && config.bot_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bot_fraction must be in [0,1]");
  }
  if (!(config.train_fraction >= 0.0 && config.train_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "train_fraction must be in [0,1]");
  }
  Rng rng(derive_seed(seed, "dataset"));
  const std::size_t n = config.users;
  const std::size_t bots = floor_count(n, config.bot_fraction);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> is_bot(n, false);
  for (std::size_t i = 0; i < bots; ++i) is_bot[order[i]] = true;

  // Stratified split: the first floor(class_size * train_fraction) members of
  // each class (in shuffled order) go to train.
  std::vector<Split> split(n, Split::kTest);
  {
    const std::size_t train_bots = floor_count(bots, config.train_fraction);
    const std::size_t train_humans = floor_count(n - bots, config.train_fraction);
    std::size_t seen_bots = 0, seen_humans = 0;
    std::vector<std::size_t> split_order(n);
    std::iota(split_order.begin(), split_order.end(), 0);
    rng.shuffle(std::span<std::size_t>(split_order));
    for (std::size_t idx : split_order) {
      if (is_bot[idx]) {
        if (seen_bots++ < train_bots) split[idx] = Split::kTrain;
      } else {
        if (seen_humans++ < train_humans) split[idx] = Split::kTrain;
      }
    }
  }

  const std::size_t width =
      std::max<std::size_t>(4, fmt::format("{}", n > 0 ? n - 1 : 0).size());
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = fmt::format("u{:0{}}", i, width);

  std::vector<std::string> mixed = planted_bot_lexicon();
  mixed.insert(mixed.end(), planted_human_lexicon().begin(),
               planted_human_lexicon().end());

  SocialDataset dataset;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bot = is_bot[i];
    const bool bot_profile = config.planted_signal ? bot : rng.below(2) == 0;
    UserRecord user;
    user.user_id = ids[i];
    user.username = fmt::format("acct{:06x}", rng.below(0x1000000));
    if (bot_profile) {
      user.follower_count = draw(rng, 0, 500);
      user.following_count = draw(rng, 1000, 5000);
      user.tweet_count = draw(rng, 5000, 50000);
      user.verified = false;
      user.active_years = draw(rng, 0, 4);
    } else {
      user.follower_count = draw(rng, 1000, 100000);
      user.following_count = draw(rng, 10, 1000);
      user.tweet_count = draw(rng, 100, 20000);
      user.verified = rng.below(10) < 3;
      user.active_years = draw(rng, 5, 16);
    }
    const auto& vocab = !config.planted_signal ? mixed
                        : bot ? planted_bot_lexicon()
                              : planted_human_lexicon();
    user.description = sentence(rng, vocab);
    for (std::size_t p = 0; p < config.posts_per_user; ++p) {
      user.posts.push_back(sentence(rng, vocab));
    }
    user.label = bot ? Label::kBot : Label::kHuman;
    dataset.add_user(std::move(user), split[i]);
  }

  const std::size_t follows = n > 1 ? std::min(config.follows_per_user, n - 1) : 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t added = 0;
    while (added < follows) {
      std::size_t j = rng.below(n);
      if (j == i) continue;
      if (dataset.add_edge(ids[i], ids[j])) ++added;
    }
  }
  dataset.set_provenance(
      fmt::format("synthetic users={} bot_fraction={} seed={}", n,
                  config.bot_fraction, seed));
  return dataset;
}

}  // namespace botarms

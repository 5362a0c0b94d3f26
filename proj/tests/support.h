#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "botarms/dataset.h"
#include "botarms/llm_gateway.h"
#include "botarms/mock_backend.h"
#include "botarms/synthetic.h"

namespace botarms::testing {

inline UserRecord make_user(std::string id, std::int64_t followers,
                            std::int64_t following, std::int64_t tweets,
                            bool verified, std::int64_t years,
                            std::string description,
                            std::optional<Label> label = std::nullopt,
                            std::string username = "<redacted>") {
  UserRecord u;
  u.user_id = std::move(id);
  u.username = std::move(username);
  u.follower_count = followers;
  u.following_count = following;
  u.tweet_count = tweets;
  u.verified = verified;
  u.active_years = years;
  u.description = std::move(description);
  u.label = label;
  return u;
}

inline const std::string kTrumpDescription =
    "Day 1 Trump supporter. I rode the escalator! Constitutionalist "
    "traditionalist conservative. My 1st vote was Reagan! America, family "
    "first. #1A #2A #MAGA #KAG";

// Users behind the golden prompt files.
struct PromptFixture {
  UserRecord meta_bot = make_user("m1", 309, 1412, 1745, false, 12, "",
                                  Label::kBot);
  UserRecord meta_human = make_user("m2", 4817034, 40, 6196, true, 15, "",
                                    Label::kHuman);
  UserRecord target = make_user("t1", 16596, 16944, 49757, false, 4,
                                kTrumpDescription, Label::kBot);
  UserRecord electricity = make_user("x1", 649, 3090, 12650, false, 15,
                                     "Clean electricity is the new oil",
                                     Label::kBot);
  UserRecord councillor = make_user(
      "x2", 1625, 917, 7568, false, 14,
      "Cllr Canary Wharf ward Secretary Isle of Dogs Neighbourhood Planning "
      "Forum Mainly use Facebook for new <link>",
      Label::kBot);
  UserRecord reporter = make_user("h1", 4817034, 40, 6196, true, 15,
                                  "Reporter covering science and health.",
                                  Label::kHuman);
  std::vector<UserRecord> candidates = {
      make_user("c1", 120, 300, 4000, false, 3, "Coffee first, then code.",
                Label::kHuman),
      make_user("c2", 5400, 610, 22000, true, 9,
                "Science teacher and marathon runner.", Label::kHuman),
      make_user("c3", 87, 2900, 150, false, 1,
                "Free followers every day, DM now", Label::kBot),
      make_user("c4", 230000, 75, 9100, true, 13,
                "News desk of a regional paper.", Label::kHuman),
      make_user("c5", 640, 640, 3200, false, 7,
                "Gardening, dogs and old films.", Label::kHuman),
  };

  std::vector<const UserRecord*> candidate_ptrs() const {
    std::vector<const UserRecord*> out;
    for (const auto& c : candidates) out.push_back(&c);
    return out;
  }

  // x1 follows the target, the target follows h1; the target is a test user.
  SocialDataset structure_dataset() const {
    SocialDataset d;
    UserRecord t = target;
    t.label.reset();
    d.add_user(t, Split::kTest);
    d.add_user(electricity, Split::kTrain);
    d.add_user(reporter, Split::kTrain);
    d.add_edge("x1", "t1");
    d.add_edge("t1", "h1");
    return d;
  }

  // Target bot with followers h1 and x1, following c2.
  SocialDataset selective_dataset() const {
    SocialDataset d;
    d.add_user(target, Split::kTrain);
    d.add_user(electricity, Split::kTrain);
    d.add_user(reporter, Split::kTrain);
    d.add_user(candidates[1], Split::kTrain);
    d.add_edge("x1", "t1");
    d.add_edge("h1", "t1");
    d.add_edge("t1", "c2");
    return d;
  }

  // Target bot following all five candidates.
  SocialDataset removal_dataset() const {
    SocialDataset d;
    d.add_user(target, Split::kTrain);
    for (const auto& c : candidates) {
      d.add_user(c, Split::kTrain);
      d.add_edge("t1", c.user_id);
    }
    return d;
  }
};

inline std::filesystem::path data_dir() { return BOTARMS_TEST_DATA_DIR; }

// Golden file contents minus the single trailing newline every file ends with.
inline std::string golden(const std::string& name) {
  std::ifstream in(data_dir() / "golden" / (name + ".txt"), std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("botarms_" + name + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path planted_config_path() {
  return data_dir().parent_path() / "configs" / "planted_mock.json";
}

inline std::shared_ptr<MockBackend> planted_mock() {
  std::ifstream in(planted_config_path());
  const auto config = nlohmann::json::parse(in);
  return std::make_shared<MockBackend>(
      MockBackend::from_json(config.at("backends").at("mock")));
}

inline SocialDataset planted_dataset(std::size_t users = 200,
                                     std::uint64_t seed = 7) {
  SyntheticConfig config;
  config.users = users;
  config.bot_fraction = 0.4;
  return generate_synthetic(config, seed);
}

inline std::vector<std::string> ids_in(const SocialDataset& d, Split split) {
  std::vector<std::string> ids;
  for (const UserRecord* u : d.users_in_split(split)) ids.push_back(u->user_id);
  return ids;
}

}  // namespace botarms::testing

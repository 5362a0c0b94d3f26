#include <gtest/gtest.h>

#include <sstream>

#include "botarms/detectors.h"
#include "botarms/error.h"
#include "oracles.h"
#include "support.h"

namespace botarms {
namespace {

using testing::make_user;

Completion completion(std::string text, std::optional<double> prob = std::nullopt) {
  Completion c;
  c.text = std::move(text);
  c.first_token_prob = prob;
  return c;
}

TEST(ParseLabel, AcceptsLeadingTokenVariants) {
  EXPECT_EQ(parse_label(completion("bot")).label, Label::kBot);
  EXPECT_EQ(parse_label(completion("  Bot. The account posts spam")).label, Label::kBot);
  EXPECT_EQ(parse_label(completion("\nHUMAN")).label, Label::kHuman);
  EXPECT_EQ(parse_label(completion("human, because")).label, Label::kHuman);
  EXPECT_EQ(parse_label(completion("bots")).label, Label::kBot);
}

TEST(ParseLabel, RejectsOtherTokens) {
  for (const char* text : {"", "   ", "The label is bot", "unknown", "a human"}) {
    try {
      parse_label(completion(text));
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnparseableLabel);
    }
  }
}

TEST(ParseLabel, ConfidenceFromTokenProbability) {
  const ParsedLabel with = parse_label(completion("bot", 0.83));
  EXPECT_DOUBLE_EQ(with.confidence, 0.83);
  EXPECT_FALSE(with.degenerate);
  const ParsedLabel without = parse_label(completion("human"));
  EXPECT_DOUBLE_EQ(without.confidence, 1.0);
  EXPECT_TRUE(without.degenerate);
}

Prediction vote(Modality m, int v) {
  Prediction p;
  p.user_id = "u";
  p.modality = m;
  if (v == 1) p.label = Label::kBot;
  if (v == 0) p.label = Label::kHuman;
  p.confidence = 0.7;
  return p;
}

// Every combination of bot / human / abstain over the five voters.
TEST(Ensemble, MatchesOracleOnAllVotePatterns) {
  int checked = 0;
  for (int code = 0; code < 243; ++code) {
    std::vector<int> votes;
    int c = code;
    for (int i = 0; i < 5; ++i) {
      votes.push_back(c % 3 - 1);
      c /= 3;
    }
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < 5; ++i) {
      preds.push_back(vote(kDetectorModalities[i], votes[i]));
    }
    const Prediction out = ensemble(preds);
    const auto expected = oracle::majority(votes);
    EXPECT_EQ(out.modality, Modality::kEnsemble);
    EXPECT_EQ(out.voters.size(), 5u);
    if (!expected) {
      EXPECT_TRUE(out.abstained());
      continue;
    }
    ASSERT_FALSE(out.abstained());
    EXPECT_EQ(*out.label == Label::kBot, expected->bot) << code;
    EXPECT_DOUBLE_EQ(out.confidence, expected->confidence) << code;
    EXPECT_EQ(out.tie, expected->tie) << code;
    ++checked;
  }
  EXPECT_EQ(checked, 242);
}

TEST(Ensemble, ThreeOfFiveBotIsBot) {
  std::vector<Prediction> preds;
  const int votes[5] = {1, 1, 1, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) preds.push_back(vote(kDetectorModalities[i], votes[i]));
  const Prediction out = ensemble(preds);
  EXPECT_EQ(out.label, Label::kBot);
  EXPECT_DOUBLE_EQ(out.confidence, 0.6);
}

TEST(Ensemble, TwoTwoWithAbstentionGoesHuman) {
  std::vector<Prediction> preds;
  const int votes[5] = {1, 1, -1, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) preds.push_back(vote(kDetectorModalities[i], votes[i]));
  const Prediction out = ensemble(preds);
  EXPECT_EQ(out.label, Label::kHuman);
  EXPECT_TRUE(out.tie);
  EXPECT_FALSE(out.voters.at(Modality::kMetaText).has_value());
}

TEST(Ensemble, RejectsWrongInputs) {
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < 4; ++i) preds.push_back(vote(kDetectorModalities[i], 1));
  EXPECT_THROW(ensemble(preds), Error);
  preds.push_back(vote(kDetectorModalities[0], 1));
  EXPECT_THROW(ensemble(preds), Error);
}

TEST(TextItems, DescriptionThenLeadingPosts) {
  UserRecord u = make_user("u", 0, 0, 0, false, 0, "desc");
  u.posts = {"p0", " ", "p2", "p3", "p4", "p5"};
  EXPECT_EQ(text_items(u, 4), (std::vector<std::string>{"desc", "p0", "p2", "p3"}));
  u.description = "";
  EXPECT_EQ(text_items(u, 0), std::vector<std::string>{});
}

// Scripted backend: "bot" when the target line names a bot word; the target
// line is the one just before the final "Label:".
std::shared_ptr<ScriptedBackend> keyword_backend(std::string word,
                                                 std::optional<double> prob = 0.9) {
  return std::make_shared<ScriptedBackend>(
      [word, prob](const CompletionRequest& r) {
        const auto tail = r.prompt.substr(r.prompt.rfind("\n\n"));
        if (tail.find(word) != std::string::npos) return BackendReply{"bot", prob};
        if (tail.find("garbled") != std::string::npos) return BackendReply{"???", prob};
        return BackendReply{"human", prob};
      },
      true);
}

struct TextVoteCase {
  std::vector<std::string> posts;
  std::optional<Label> expected;
  double confidence;
  bool tie;
};

TEST(TextDetector, VotesOverDescriptionAndPosts) {
  const std::vector<TextVoteCase> cases = {
      {{"spam", "spam"}, Label::kBot, 1.0, false},
      {{"spam", "fine"}, Label::kBot, 2.0 / 3.0, false},
      {{"fine", "fine", "spam"}, Label::kHuman, 0.5, true},
      {{"garbled", "garbled"}, Label::kBot, 1.0, false},
  };
  for (const auto& c : cases) {
    SocialDataset d;
    UserRecord t = make_user("t", 0, 0, 0, false, 0, "spam account");
    t.posts = c.posts;
    d.add_user(t, Split::kTest);
    d.add_user(make_user("a", 0, 0, 0, false, 0, "hello", Label::kHuman), Split::kTrain);
    const DetectorEnvironment env(d, nullptr);
    LlmGateway gw(CacheMode::kLive, std::nullopt);
    gw.register_backend("b", keyword_backend("spam"));
    DetectorSettings s;
    s.backend = "b";
    s.icl_count = 2;
    const Prediction p = predict_modality(Modality::kText, d.user("t"), env, gw, s);
    EXPECT_EQ(p.label, c.expected);
    EXPECT_DOUBLE_EQ(p.confidence, c.confidence);
    EXPECT_EQ(p.tie, c.tie);
    EXPECT_EQ(p.cache_keys.size(), 1 + c.posts.size());
  }
}

TEST(TextDetector, NoTextAbstains) {
  SocialDataset d;
  d.add_user(make_user("t", 0, 0, 0, false, 0, ""), Split::kTest);
  const DetectorEnvironment env(d, nullptr);
  LlmGateway gw(CacheMode::kLive, std::nullopt);
  gw.register_backend("b", keyword_backend("spam"));
  DetectorSettings s;
  s.backend = "b";
  EXPECT_TRUE(predict_modality(Modality::kText, d.user("t"), env, gw, s).abstained());
}

TEST(TextDetector, RetrievalExcludesTargetAndUsesCount) {
  const SocialDataset d = testing::planted_dataset(60, 2);
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.icl_count = 4;
  s.retrieval_count = 6;
  const UserRecord& u = *d.users_in_split(Split::kTrain).front();
  const PromptContext ctx = build_prompt_context(Modality::kText, u, env, s, u.description);
  ASSERT_TRUE(ctx.retrieved);
  EXPECT_EQ(ctx.retrieved->size(), 6u);
}

TEST(MetadataDetector, ExamplesExcludeTargetAndAreBalanced) {
  const SocialDataset d = testing::planted_dataset(60, 2);
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.icl_count = 8;
  for (const UserRecord* u : d.users_in_split(Split::kTrain)) {
    const PromptContext ctx = build_prompt_context(Modality::kMetadata, *u, env, s);
    ASSERT_EQ(ctx.examples->size(), 8u);
    std::size_t bots = 0;
    for (const auto* e : *ctx.examples) {
      EXPECT_NE(e->user_id, u->user_id);
      bots += e->label == Label::kBot;
    }
    EXPECT_EQ(bots, 4u);
  }
}

TEST(MetadataDetector, OddCountIsInvalid) {
  const SocialDataset d = testing::planted_dataset(60, 2);
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.icl_count = 3;
  EXPECT_THROW(build_prompt_context(Modality::kMetadata, *d.users_in_split(Split::kTest)[0],
                                    env, s),
               Error);
}

class PlantedDetection : public ::testing::Test {
 protected:
  void SetUp() override {
    dataset_ = testing::planted_dataset();
    gateway_.register_backend("mock", testing::planted_mock());
    settings_.backend = "mock";
    settings_.seed = 7;
  }

  DetectionRun run(std::size_t workers) {
    const DetectorEnvironment env(dataset_, &embedder_);
    const auto ids = testing::ids_in(dataset_, Split::kTest);
    return detect_users(ids, kDetectorModalities, env, gateway_, settings_, workers);
  }

  SocialDataset dataset_;
  HashedBagOfWordsEmbedder embedder_;
  LlmGateway gateway_{CacheMode::kLive, std::nullopt};
  DetectorSettings settings_;
};

TEST_F(PlantedDetection, EveryModalityRecoversThePlantedSignal) {
  const DetectionRun result = run(4);
  EXPECT_TRUE(result.failures.empty());
  ASSERT_EQ(result.predictions.size(), 100u * 6u);
  std::map<Modality, int> correct;
  for (const auto& p : result.predictions) {
    ASSERT_TRUE(p.label) << p.user_id;
    correct[p.modality] += *p.label == *dataset_.user(p.user_id).label;
  }
  for (Modality m : kDetectorModalities) EXPECT_EQ(correct[m], 100) << to_string(m);
  EXPECT_EQ(correct[Modality::kEnsemble], 100);
}

TEST_F(PlantedDetection, WorkerCountDoesNotChangeOutput) {
  std::stringstream a, b;
  write_predictions(run(1).predictions, a);
  write_predictions(run(8).predictions, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(PlantedDetection, OutputOrderIsTargetThenModality) {
  const auto preds = run(2).predictions;
  const auto ids = testing::ids_in(dataset_, Split::kTest);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].user_id, ids[i / 6]);
    const Modality expected =
        i % 6 == 5 ? Modality::kEnsemble : kDetectorModalities[i % 6];
    EXPECT_EQ(preds[i].modality, expected);
  }
}

TEST(DetectUsers, TransportFailuresBecomeAbstentions) {
  const SocialDataset d = testing::planted_dataset(40, 1);
  LlmGateway gw(CacheMode::kLive, std::nullopt,
                {1, std::chrono::milliseconds(0), std::chrono::milliseconds(0)});
  gw.register_backend("b", std::make_shared<ScriptedBackend>([](const CompletionRequest&) -> BackendReply {
    throw TransportError("connection refused", false);
  }));
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.backend = "b";
  s.icl_count = 4;
  const auto ids = testing::ids_in(d, Split::kTest);
  const std::vector<Modality> mods = {Modality::kMetadata};
  const DetectionRun result = detect_users(ids, mods, env, gw, s);
  EXPECT_EQ(result.failures.size(), ids.size());
  for (const auto& p : result.predictions) EXPECT_TRUE(p.abstained());
}

TEST(DetectUsers, ReplayMissAborts) {
  const SocialDataset d = testing::planted_dataset(40, 1);
  const auto dir = testing::fresh_dir("detect_replay");
  std::ofstream(dir / "c.jsonl").close();
  LlmGateway gw(CacheMode::kReplay, dir / "c.jsonl");
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.backend = "mock";
  s.icl_count = 4;
  const auto ids = testing::ids_in(d, Split::kTest);
  const std::vector<Modality> mods = {Modality::kMetadata};
  try {
    detect_users(ids, mods, env, gw, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kReplayMiss);
  }
}

TEST(DetectUsers, NoEnsembleRowUnlessAllFive) {
  const SocialDataset d = testing::planted_dataset(40, 1);
  LlmGateway gw(CacheMode::kLive, std::nullopt);
  gw.register_backend("mock", testing::planted_mock());
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.backend = "mock";
  s.icl_count = 4;
  const auto ids = testing::ids_in(d, Split::kTest);
  const std::vector<Modality> mods = {Modality::kMetadata, Modality::kText};
  const auto preds = detect_users(ids, mods, env, gw, s).predictions;
  EXPECT_EQ(preds.size(), ids.size() * 2);
  for (const auto& p : preds) EXPECT_NE(p.modality, Modality::kEnsemble);
}

TEST(PredictionIo, RoundTrip) {
  std::vector<Prediction> preds;
  Prediction a = vote(Modality::kMetadata, 1);
  a.cache_keys = {"k1"};
  a.degenerate = true;
  preds.push_back(a);
  Prediction e;
  e.user_id = "u";
  e.modality = Modality::kEnsemble;
  e.label = Label::kHuman;
  e.tie = true;
  e.confidence = 0.5;
  e.voters = {{Modality::kMetadata, Label::kBot}, {Modality::kText, std::nullopt}};
  preds.push_back(e);
  preds.push_back(vote(Modality::kText, -1));
  std::stringstream ss;
  write_predictions(preds, ss);
  const auto back = read_predictions(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].label, Label::kBot);
  EXPECT_TRUE(back[0].degenerate);
  EXPECT_EQ(back[0].cache_keys, a.cache_keys);
  EXPECT_EQ(back[1].voters, e.voters);
  EXPECT_TRUE(back[1].tie);
  EXPECT_TRUE(back[2].abstained());
  std::istringstream bad("{\"user_id\":\"u\",\"modality\":\"nope\",\"label\":null,\"confidence\":0}\n");
  EXPECT_THROW(read_predictions(bad), Error);
}

}  // namespace
}  // namespace botarms

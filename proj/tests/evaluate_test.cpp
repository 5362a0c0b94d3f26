#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "botarms/error.h"
#include "botarms/evaluate.h"
#include "botarms/synthetic.h"
#include "oracles.h"
#include "support.h"

namespace botarms {
namespace {

using testing::make_user;

TEST(Metrics, HandComputedExample) {
  const ConfusionCounts c{40, 10, 45, 5};
  const ClassificationMetrics m = metrics(c);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.85);
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_NEAR(m.recall, 40.0 / 45.0, 1e-12);
  EXPECT_NEAR(m.f1, 2 * 0.8 * (40.0 / 45.0) / (0.8 + 40.0 / 45.0), 1e-12);
  EXPECT_NEAR(m.f1, 0.842105, 1e-6);
}

TEST(Metrics, AllHumanPredictionsOnAllHumanSplit) {
  ConfusionCounts c;
  for (int i = 0; i < 10; ++i) c.add(Label::kHuman, Label::kHuman);
  const ClassificationMetrics m = metrics(c);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_TRUE(m.precision_degenerate);
  EXPECT_TRUE(m.recall_degenerate);
}

TEST(Metrics, EmptyIsInsufficient) {
  try {
    metrics(ConfusionCounts{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(Metrics, AddRoutesCells) {
  ConfusionCounts c;
  c.add(Label::kBot, Label::kBot);
  c.add(Label::kBot, Label::kHuman);
  c.add(Label::kHuman, Label::kHuman);
  c.add(Label::kHuman, Label::kBot);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 1}));
}

Prediction pred(std::string user, Modality m, std::optional<Label> label,
                double confidence = 0.9, bool degenerate = false) {
  Prediction p;
  p.user_id = std::move(user);
  p.modality = m;
  p.label = label;
  p.confidence = confidence;
  p.degenerate = degenerate;
  return p;
}

SocialDataset gold_dataset() {
  SocialDataset d;
  d.add_user(make_user("b1", 0, 0, 0, false, 0, "", Label::kBot), Split::kTest);
  d.add_user(make_user("b2", 0, 0, 0, false, 0, "", Label::kBot), Split::kTest);
  d.add_user(make_user("h1", 0, 0, 0, false, 0, "", Label::kHuman), Split::kTest);
  d.add_user(make_user("u1", 0, 0, 0, false, 0, ""), Split::kTest);
  return d;
}

TEST(ScorePredictions, CountsAbstentionsAndUnlabeled) {
  const std::vector<Prediction> preds = {
      pred("b1", Modality::kText, Label::kBot),
      pred("b2", Modality::kText, std::nullopt),
      pred("h1", Modality::kText, Label::kBot),
      pred("u1", Modality::kText, Label::kHuman),
      pred("b1", Modality::kMetadata, Label::kHuman),
  };
  const auto rows = score_predictions(preds, gold_dataset());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].modality, Modality::kText);
  EXPECT_EQ(rows[0].counts, (ConfusionCounts{1, 1, 0, 0}));
  EXPECT_EQ(rows[0].abstentions, 1u);
  EXPECT_EQ(rows[0].unlabeled, 1u);
  EXPECT_EQ(rows[1].counts, (ConfusionCounts{0, 0, 0, 1}));
  std::ostringstream out;
  write_metrics_tsv(rows, out);
  const std::string tsv = out.str();
  EXPECT_TRUE(tsv.starts_with("# positive_class=bot"));
  EXPECT_NE(tsv.find("text\t2\t1\t1\t1\t1\t0\t0\t0.500000\t0.666667\t0.500000\t1.000000\t-"),
            std::string::npos)
      << tsv;
  EXPECT_NE(tsv.find("\tprecision_zero_denominator\n"), std::string::npos) << tsv;
}

TEST(Ece, HandComputedBins) {
  // Bin 0.9: conf 0.95, 0.95 with one correct -> |0.5 - 0.95| * 2/4.
  // Bin 0.6: conf 0.65, 0.65 both correct -> |1 - 0.65| * 2/4.
  const std::vector<CalibrationInput> in = {
      {0.95, true}, {0.95, false}, {0.65, true}, {0.65, true}};
  const CalibrationReport r = ece(in);
  EXPECT_NEAR(r.ece, 0.5 * 0.45 + 0.5 * 0.35, 1e-12);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.bins[9].count, 2u);
  EXPECT_EQ(r.bins[6].count, 2u);
}

TEST(Ece, PerfectCalibrationIsZero) {
  std::vector<CalibrationInput> in;
  for (int i = 0; i < 10; ++i) in.push_back({0.7, i < 7});
  EXPECT_NEAR(ece(in).ece, 0.0, 1e-12);
}

TEST(Ece, EdgesAndOneGoToUpperBins) {
  const std::vector<CalibrationInput> in = {
      {0.0, false}, {0.1, true}, {0.3, true}, {0.7, true}, {1.0, true}};
  const CalibrationReport r = ece(in);
  EXPECT_EQ(r.bins[0].count, 1u);
  EXPECT_EQ(r.bins[1].count, 1u);
  EXPECT_EQ(r.bins[3].count, 1u);
  EXPECT_EQ(r.bins[7].count, 1u);
  EXPECT_EQ(r.bins[9].count, 1u);
}

TEST(Ece, MatchesOracleOnRandomInputs) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int round = 0; round < 100; ++round) {
    std::vector<CalibrationInput> in;
    std::vector<std::pair<double, bool>> ref;
    const int n = 1 + static_cast<int>(gen() % 60);
    for (int i = 0; i < n; ++i) {
      // Mix continuous values with exact bin edges.
      double c = gen() % 4 == 0 ? static_cast<double>(gen() % 11) / 10.0 : u(gen);
      const bool ok = gen() % 2;
      in.push_back({c, ok});
      ref.push_back({c, ok});
    }
    EXPECT_NEAR(ece(in).ece, oracle::ece(ref), 1e-12) << round;
  }
}

TEST(Ece, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW(ece({}), Error);
  const std::vector<CalibrationInput> bad = {{1.2, true}};
  EXPECT_THROW(ece(bad), Error);
  const std::vector<CalibrationInput> ok = {{0.5, true}};
  EXPECT_THROW(ece(ok, 0), Error);
}

TEST(Calibration, ModesAndCoverage) {
  const std::vector<Prediction> preds = {
      pred("b1", Modality::kText, Label::kBot, 0.8),
      pred("h1", Modality::kText, Label::kBot, 0.6),
      pred("b2", Modality::kText, Label::kHuman, 0.7),
      pred("b2", Modality::kMetadata, Label::kHuman, 1.0, true),
      pred("u1", Modality::kText, Label::kBot, 0.9),
  };
  const SocialDataset gold = gold_dataset();
  const auto by_label =
      calibration_inputs(preds, gold, Modality::kText, ConfidenceMode::kPredictedLabel);
  ASSERT_EQ(by_label.inputs.size(), 3u);
  EXPECT_TRUE(by_label.inputs[0].correct);
  EXPECT_FALSE(by_label.inputs[1].correct);
  EXPECT_DOUBLE_EQ(by_label.inputs[2].confidence, 0.7);
  EXPECT_EQ(by_label.skipped, 1u);
  EXPECT_DOUBLE_EQ(by_label.coverage, 1.0);
  const auto by_bot =
      calibration_inputs(preds, gold, Modality::kText, ConfidenceMode::kBotLikelihood);
  EXPECT_NEAR(by_bot.inputs[2].confidence, 0.3, 1e-12);
  EXPECT_TRUE(by_bot.inputs[2].correct);
  const auto meta =
      calibration_inputs(preds, gold, Modality::kMetadata, ConfidenceMode::kPredictedLabel);
  EXPECT_TRUE(meta.inputs.empty());
  EXPECT_EQ(meta.degenerate, 1u);
  EXPECT_DOUBLE_EQ(meta.coverage, 0.0);

  std::ostringstream out;
  write_calibration_json(preds, gold, ConfidenceMode::kPredictedLabel, 10, out);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j.at("modalities").at("metadata").at("ece").is_null());
  EXPECT_TRUE(j.at("modalities").at("text").at("ece").is_number());
}

TEST(Likert, Parse) {
  EXPECT_EQ(parse_likert("3"), 3);
  EXPECT_EQ(parse_likert("Answer: 4 (very similar)"), 4);
  EXPECT_EQ(parse_likert("1"), 1);
  EXPECT_FALSE(parse_likert("5"));
  EXPECT_FALSE(parse_likert("0"));
  EXPECT_FALSE(parse_likert("34"));
  EXPECT_FALSE(parse_likert("similar"));
}

TEST(Similarity, PopulationStdev) {
  const std::vector<int> scores = {4, 3, 3, 2};
  const SimilaritySummary s = summarize_similarity(scores, 1);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.stdev, std::sqrt(0.5));
  EXPECT_EQ(s.n, 4u);
  EXPECT_EQ(s.failures, 1u);
  const SimilaritySummary empty = summarize_similarity({}, 0);
  EXPECT_EQ(empty.n, 0u);
}

TEST(Similarity, JudgesNonNoopRewrites) {
  LlmGateway gw(CacheMode::kLive, std::nullopt);
  gw.register_backend("j", std::make_shared<ScriptedBackend>([](const CompletionRequest& r) {
    if (r.prompt.find("Post 2: garbled") != std::string::npos) return BackendReply{"?", {}};
    if (r.prompt.find("Post 2: close") != std::string::npos) return BackendReply{"4", {}};
    return BackendReply{"2", {}};
  }));
  JudgeSettings s;
  s.backend = "j";
  EditLog log;
  auto rewrite = [&](std::string old_text, std::string new_text) {
    log.edits.push_back(
        Edit{TextRewrite{"u", std::nullopt, std::move(old_text), std::move(new_text), {}},
             "zero_shot", 0, {}});
  };
  rewrite("a", "close");
  rewrite("b", "far");
  rewrite("c", "c");
  rewrite("d", "garbled");
  log.edits.push_back(Edit{AddFollow{"u", "v"}, "add_neighbor", 0, {}});
  const SimilaritySummary summary = judge_edit_log(log, gw, s, 3);
  EXPECT_EQ(summary.n, 2u);
  EXPECT_EQ(summary.failures, 1u);
  EXPECT_DOUBLE_EQ(summary.mean, 3.0);
  EXPECT_THROW(judge_similarity("", "x", gw, s), Error);
  try {
    judge_similarity("x", "garbled", gw, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kJudgeFailed);
  }
}

TEST(NeighborStatsTest, HistogramsAndVerifiedRate) {
  SocialDataset d;
  d.add_user(make_user("bot", 0, 0, 0, false, 0, "", Label::kBot), Split::kTrain);
  d.add_user(make_user("a", 0, 5, 10, true, 3, ""), Split::kTest);
  d.add_user(make_user("b", 1000000, 99, 100, false, 25, ""), Split::kTest);
  d.add_user(make_user("c", 999999, 9, 1, true, 19, ""), Split::kTest);
  const EditLog log{{Edit{AddFollow{"bot", "a"}, "s", 0, {}},
                     Edit{AddFollow{"bot", "b"}, "s", 0, {}},
                     Edit{RemoveFollow{"bot", "c"}, "s", 0, {}}}};
  const NeighborStats stats = neighbor_stats(log, d);
  EXPECT_EQ(stats.added.accounts, 2u);
  EXPECT_DOUBLE_EQ(stats.added.verified_rate(), 0.5);
  const auto& fc = stats.added.follower_count;
  ASSERT_EQ(fc.bins.size(), 8u);
  EXPECT_EQ(fc.bins.front(), "0");
  EXPECT_EQ(fc.bins[1], "1-9");
  EXPECT_EQ(fc.bins[6], "100000-999999");
  EXPECT_EQ(fc.bins.back(), "1000000+");
  EXPECT_EQ(fc.counts[0], 1u);
  EXPECT_EQ(fc.counts[7], 1u);
  EXPECT_EQ(stats.removed.follower_count.counts[6], 1u);
  EXPECT_EQ(stats.added.following_count.counts[1], 1u);
  EXPECT_EQ(stats.added.following_count.counts[2], 1u);
  EXPECT_EQ(stats.added.tweet_count.counts[2], 1u);
  EXPECT_EQ(stats.added.tweet_count.counts[3], 1u);
  const auto& years = stats.added.active_years;
  ASSERT_EQ(years.bins.size(), 21u);
  EXPECT_EQ(years.counts[3], 1u);
  EXPECT_EQ(years.counts[20], 1u);
  EXPECT_EQ(stats.removed.active_years.counts[19], 1u);
  EXPECT_EQ(fc.total(), 2u);

  std::ostringstream out;
  write_neighbor_stats_tsv(stats, out);
  EXPECT_NE(out.str().find("# added accounts=2 verified_rate=0.500000"), std::string::npos);
  EXPECT_NE(out.str().find("added\tfollower_count\t1000000+\t1\n"), std::string::npos);

  const EditLog ghost{{Edit{AddFollow{"bot", "zz"}, "s", 0, {}}}};
  EXPECT_THROW(neighbor_stats(ghost, d), Error);
}

TEST(Sweep, RowsPerCountAndModality) {
  const SocialDataset d = testing::planted_dataset(80, 3);
  LlmGateway gw(CacheMode::kLive, std::nullopt);
  gw.register_backend("mock", testing::planted_mock());
  const HashedBagOfWordsEmbedder embedder;
  const DetectorEnvironment env(d, &embedder);
  DetectorSettings s;
  s.backend = "mock";
  s.seed = 2;
  const auto ids = testing::ids_in(d, Split::kTest);
  const std::vector<Modality> mods = {Modality::kMetadata, Modality::kText, Modality::kEnsemble};
  const std::vector<std::size_t> ns = {0, 2, 4};
  const auto rows = sweep_icl(env, ids, mods, ns, gw, s, 4);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].n, ns[i / 3]);
    EXPECT_EQ(rows[i].modality, mods[i % 3]);
    EXPECT_TRUE(rows[i].error.empty()) << rows[i].error;
    ASSERT_TRUE(rows[i].metrics);
    EXPECT_EQ(rows[i].score.counts.total(), ids.size());
  }
  std::ostringstream out;
  write_sweep_tsv(rows, out);
  EXPECT_NE(out.str().find("ensemble\t4\t"), std::string::npos);
  const std::vector<std::size_t> odd = {3};
  EXPECT_THROW(sweep_icl(env, ids, mods, odd, gw, s), Error);
}

TEST(Sweep, InsufficientExamplesKeepRowWithError) {
  const SocialDataset d = testing::planted_dataset(20, 3);
  LlmGateway gw(CacheMode::kLive, std::nullopt);
  gw.register_backend("mock", testing::planted_mock());
  const DetectorEnvironment env(d, nullptr);
  DetectorSettings s;
  s.backend = "mock";
  const auto ids = testing::ids_in(d, Split::kTest);
  const std::vector<Modality> mods = {Modality::kMetadata};
  const std::vector<std::size_t> ns = {64};
  const auto rows = sweep_icl(env, ids, mods, ns, gw, s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].metrics);
  EXPECT_FALSE(rows[0].error.empty());
}

}  // namespace
}  // namespace botarms

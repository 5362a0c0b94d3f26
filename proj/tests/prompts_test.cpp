#include <gtest/gtest.h>

#include "botarms/detectors.h"
#include "botarms/error.h"
#include "botarms/prompts.h"
#include "support.h"

namespace botarms {
namespace {

using testing::golden;
using testing::make_user;
using testing::PromptFixture;

TEST(DetectorPrompts, Metadata) {
  const PromptFixture f;
  const std::vector<const UserRecord*> examples = {&f.meta_bot, &f.meta_human};
  EXPECT_EQ(metadata_prompt(examples, f.target).text(), golden("metadata_detector"));
}

TEST(DetectorPrompts, Text) {
  const PromptFixture f;
  const std::vector<LabeledText> examples = {
      {"sc/ shenellemoorr ig/ shenellemoore", Label::kBot},
      {"A marketer in and out. Writes on marketing & sometimes straight from "
       "the heart. Check out at <link>",
       Label::kBot}};
  EXPECT_EQ(text_prompt(examples, f.target.description).text(),
            golden("text_detector"));
}

TEST(DetectorPrompts, MetaText) {
  const PromptFixture f;
  const std::vector<const UserRecord*> examples = {&f.electricity, &f.councillor};
  EXPECT_EQ(meta_text_prompt(examples, f.target).text(),
            golden("meta_text_detector"));
}

TEST(DetectorPrompts, StructureBothOrderings) {
  const PromptFixture f;
  const SocialDataset d = f.structure_dataset();
  const HashedBagOfWordsEmbedder embedder;
  const DetectorEnvironment env(d, &embedder);
  DetectorSettings settings;
  settings.seed = 3;
  const UserRecord& target = d.user("t1");
  for (auto [modality, name] :
       {std::pair{Modality::kStructRandom, "struct_random_detector"},
        std::pair{Modality::kStructAttention, "struct_attention_detector"}}) {
    const PromptContext ctx = build_prompt_context(modality, target, env, settings);
    EXPECT_EQ(render_detector_prompt(modality, target, ctx).text(), golden(name))
        << name;
  }
}

TEST(DetectorPrompts, EmptyExampleListKeepsTargetBlock) {
  const PromptFixture f;
  const RenderedPrompt p = metadata_prompt({}, f.target);
  EXPECT_EQ(p.body, verbalize_metadata(f.target) + "\nLabel:");
}

TEST(DetectorPrompts, UnlabeledExampleRejected) {
  const PromptFixture f;
  UserRecord unlabeled = f.meta_bot;
  unlabeled.label.reset();
  const std::vector<const UserRecord*> examples = {&unlabeled};
  EXPECT_THROW(metadata_prompt(examples, f.target), Error);
}

TEST(DetectorPrompts, MissingIngredientNamed) {
  const PromptFixture f;
  try {
    render_detector_prompt(Modality::kText, f.target, PromptContext{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_THROW(render_detector_prompt(Modality::kStructRandom, f.target, PromptContext{}),
               Error);
  EXPECT_THROW(render_detector_prompt(Modality::kEnsemble, f.target, PromptContext{}),
               Error);
}

TEST(RewritePrompts, ZeroShot) {
  EXPECT_EQ(zero_shot_rewrite_prompt(testing::kTrumpDescription).text(),
            golden("zero_shot_rewrite"));
}

TEST(RewritePrompts, FewShot) {
  const PromptFixture f;
  const std::vector<std::string> examples = {f.candidates[1].description,
                                             f.candidates[4].description,
                                             f.reporter.description};
  EXPECT_EQ(few_shot_rewrite_prompt(examples, f.electricity.description).text(),
            golden("few_shot_rewrite"));
}

TEST(RewritePrompts, ClassifierGuidance) {
  const std::vector<TrajectoryStep> history = {
      {"Free followers every day, DM now", 0.68},
      {"Daily posts about growing your audience.", 0.26}};
  EXPECT_EQ(classifier_guidance_prompt(history).text(),
            golden("classifier_guidance_rewrite"));
}

TEST(RewritePrompts, ScoresRoundToTwoDecimals) {
  const std::vector<TrajectoryStep> history = {{"a", 0.126}, {"b", 0.004}, {"c", 1.0}};
  const std::string body = classifier_guidance_prompt(history).body;
  EXPECT_NE(body.find("Score: 0.13\n"), std::string::npos);
  EXPECT_NE(body.find("Score: 0.00\n"), std::string::npos);
  EXPECT_NE(body.find("Score: 1.00\n"), std::string::npos);
}

TEST(RewritePrompts, TextAttributeSummary) {
  const PromptFixture f;
  const std::vector<std::string> bots = {f.candidates[2].description,
                                         f.electricity.description};
  const std::vector<std::string> humans = {f.candidates[1].description,
                                           f.candidates[4].description};
  EXPECT_EQ(text_attribute_summary_prompt(bots, humans).text(),
            golden("text_attribute_summary"));
}

TEST(RewritePrompts, TextAttributeRewrite) {
  const PromptFixture f;
  EXPECT_EQ(text_attribute_rewrite_prompt(
                "Human descriptions mention a job or hobby in the first person.",
                f.candidates[2].description)
                .text(),
            golden("text_attribute_rewrite"));
}

TEST(NeighborPrompts, Add) {
  const PromptFixture f;
  EXPECT_EQ(neighbor_add_prompt(f.target, f.candidate_ptrs()).text(),
            golden("neighbor_add"));
}

TEST(NeighborPrompts, Remove) {
  const PromptFixture f;
  EXPECT_EQ(neighbor_remove_prompt(f.target, f.candidate_ptrs()).text(),
            golden("neighbor_remove"));
}

TEST(NeighborPrompts, CountWordsFollowListLength) {
  const PromptFixture f;
  auto ptrs = f.candidate_ptrs();
  ptrs.resize(3);
  const std::string add = neighbor_add_prompt(f.target, ptrs).text();
  EXPECT_NE(add.find("three potential new users to follow"), std::string::npos);
  EXPECT_NE(add.find("(1-3):"), std::string::npos);
  EXPECT_EQ(add.find("user 4:"), std::string::npos);
  ptrs.resize(1);
  const std::string remove = neighbor_remove_prompt(f.target, ptrs).text();
  EXPECT_NE(remove.find("one potential user to unfollow"), std::string::npos);
  EXPECT_NE(remove.find("(1-1):"), std::string::npos);
}

TEST(NeighborPrompts, RejectsEmptyAndOversizedLists) {
  const PromptFixture f;
  EXPECT_THROW(neighbor_add_prompt(f.target, {}), Error);
  auto ptrs = f.candidate_ptrs();
  ptrs.push_back(&f.reporter);
  EXPECT_THROW(neighbor_add_prompt(f.target, ptrs), Error);
}

TEST(NeighborPrompts, SelectiveCombine) {
  const PromptFixture f;
  const SocialDataset d = f.selective_dataset();
  const Neighborhood hood = neighbor_sets(d, "t1");
  EXPECT_EQ(selective_combine_prompt(d.user("t1"), hood.followers, hood.followings)
                .text(),
            golden("selective_combine"));
}

TEST(NeighborPrompts, SelectiveCombineWithoutNeighbors) {
  const PromptFixture f;
  const std::string text = selective_combine_prompt(f.target, {}, {}).text();
  EXPECT_NE(text.find("These users follow the target user:\n\nThe target user "
                      "follows these users:\n\nDescription or"),
            std::string::npos)
      << text;
}

TEST(JudgePrompt, CarriesBothTexts) {
  const std::string text = similarity_judge_prompt("orig text", "new text").text();
  EXPECT_NE(text.find("4-point Likert scale"), std::string::npos);
  EXPECT_NE(text.find("Post 1: orig text\nPost 2: new text"), std::string::npos);
  EXPECT_TRUE(text.ends_with("Answer:"));
}

TEST(Modality, NamesRoundTrip) {
  for (Modality m : {Modality::kMetadata, Modality::kText, Modality::kMetaText,
                     Modality::kStructRandom, Modality::kStructAttention,
                     Modality::kEnsemble}) {
    EXPECT_EQ(modality_from_string(to_string(m)), m);
  }
  EXPECT_FALSE(modality_from_string("graph"));
}

}  // namespace
}  // namespace botarms

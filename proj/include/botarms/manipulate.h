#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botarms/dataset.h"
#include "botarms/edit_log.h"
#include "botarms/error.h"
#include "botarms/llm_gateway.h"
#include "botarms/retrieval.h"
#include "botarms/scorer.h"

namespace botarms {

enum class Strategy {
  kZeroShot,
  kFewShot,
  kClassifierGuide,
  kTextAttribute,
  kAddNeighbor,
  kRemoveNeighbor,
  kCombineNeighbor,
  kSelectiveCombine,
  kBothCombine,
};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);
std::span<const Strategy> all_strategies();

// Which version of a guided trajectory becomes the rewrite.
enum class GuidanceSelection { kMinScore, kLast };

struct AttackSettings {
  std::string backend;
  double temperature = kDefaultTemperature;
  int max_tokens = kRewriteMaxTokens;
  // For index and A/B/C answers.
  int choice_max_tokens = kLabelMaxTokens;
  // Retrieved descriptions per class for few-shot and text-attribute prompts.
  std::size_t retrieval_count = 16;
  int iterations = 5;
  GuidanceSelection selection = GuidanceSelection::kMinScore;
  std::size_t add_candidates = 5;
  std::uint64_t seed = 0;
};

// Thrown when classifier guidance aborts; carries the versions scored so far.
class GuidanceError : public Error {
 public:
  GuidanceError(ErrorCode code, const std::string& message,
                GuidanceTrajectory partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const GuidanceTrajectory& partial() const { return partial_; }

 private:
  GuidanceTrajectory partial_;
};

// Text strategies. Each rewrites the description; preconditions violations
// throw kInvalidArgument, an empty completion throws kRewriteFailed.
TextRewrite rewrite_zero_shot(const UserRecord& bot, LlmGateway& gateway,
                              const AttackSettings& settings);
TextRewrite rewrite_few_shot(const UserRecord& bot, const Bm25Index& human_index,
                             std::size_t n, LlmGateway& gateway,
                             const AttackSettings& settings);
// Trajectory holds settings.iterations + 1 scored versions.
TextRewrite rewrite_classifier_guided(const UserRecord& bot,
                                      const BotScorer& scorer,
                                      LlmGateway& gateway,
                                      const AttackSettings& settings);
TextRewrite rewrite_text_attribute(const UserRecord& bot,
                                   const Bm25Index& human_index,
                                   const Bm25Index& bot_index, std::size_t n,
                                   LlmGateway& gateway,
                                   const AttackSettings& settings);

// First run of digits in the text, accepted when it lies in [1, k].
std::optional<std::size_t> parse_choice_index(std::string_view text,
                                              std::size_t k);

// Seeded sample of up to k users the bot does not follow, never the bot itself.
std::vector<const UserRecord*> pick_add_candidates(const SocialDataset& dataset,
                                                   const UserRecord& bot,
                                                   std::size_t k,
                                                   std::uint64_t seed);

// Throws kSuggestionFailed on an unparseable or out-of-range answer.
AddFollow suggest_add(const UserRecord& bot,
                      std::span<const UserRecord* const> candidates,
                      const SocialDataset& dataset, LlmGateway& gateway,
                      const AttackSettings& settings);
// Presents up to five current followings in ascending id order. Throws
// kInvalidArgument when the bot follows nobody.
RemoveFollow suggest_remove(const UserRecord& bot, const SocialDataset& dataset,
                            LlmGateway& gateway, const AttackSettings& settings);

struct NeighborFailure {
  std::string stage;  // "add" or "remove"
  std::string message;
};

struct CombineOutcome {
  std::optional<AddFollow> add;
  std::optional<RemoveFollow> remove;
  std::vector<NeighborFailure> failures;
};

// Add and remove suggested independently against the unedited neighborhood.
CombineOutcome combine_neighbor(const UserRecord& bot,
                                std::span<const UserRecord* const> candidates,
                                const SocialDataset& dataset,
                                LlmGateway& gateway,
                                const AttackSettings& settings);

enum class Suspicion { kTextOnly, kGraphOnly, kBoth };
std::string_view to_string(Suspicion suspicion);

struct ModalityChoice {
  Suspicion suspicion = Suspicion::kBoth;
  // No A/B/C answer was found and the default applied.
  bool defaulted = false;
};

// First standalone uppercase A, B or C (not adjacent to another letter).
std::optional<Suspicion> parse_suspicion(std::string_view text);

ModalityChoice select_modality(const UserRecord& bot,
                               const SocialDataset& dataset,
                               LlmGateway& gateway,
                               const AttackSettings& settings);

struct AttackFailure {
  std::string user_id;
  std::string stage;
  std::string message;
};

struct AttackResult {
  EditLog log;
  SocialDataset dataset;
  std::vector<AttackFailure> failures;
};

// Edits for every target (sorted, deduplicated) on the original dataset, in
// target order with text edits before add before remove. Targets must exist
// and be labeled bot (kInvalidArgument). Per-user failures are collected;
// replay misses and configuration errors abort. scorer is required by
// classifier_guide, selective_combine and both_combine (kConfig otherwise).
AttackResult run_strategy(Strategy strategy, const SocialDataset& dataset,
                          std::span<const std::string> targets,
                          LlmGateway& gateway, const BotScorer* scorer,
                          const AttackSettings& settings,
                          std::size_t workers = 1);

}  // namespace botarms

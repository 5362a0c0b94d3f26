#pragma once

#include <span>
#include <string>
#include <string_view>

#include "botarms/dataset.h"
#include "botarms/edit_log.h"
#include "botarms/linearize.h"
#include "botarms/modality.h"

namespace botarms {

// A prompt split into its fixed instruction paragraph and the variable body
// (in-context examples plus target). The text sent to a backend is
// instruction + "\n\n" + body, or just body when the template has no
// separate instruction.
struct RenderedPrompt {
  std::string instruction;
  std::string body;

  std::string text() const {
    return instruction.empty() ? body : instruction + "\n\n" + body;
  }
};

struct LabeledText {
  std::string text;
  Label label = Label::kHuman;
};

// Instruction sentence of each detector template; kEnsemble has none.
std::string_view detector_instruction(Modality modality);

// In-context examples must carry labels (kInvalidArgument otherwise). An empty
// example list yields a prompt holding only the target block.
RenderedPrompt metadata_prompt(std::span<const UserRecord* const> examples,
                               const UserRecord& target);
RenderedPrompt text_prompt(std::span<const LabeledText> examples,
                           std::string_view target_text);
RenderedPrompt meta_text_prompt(std::span<const UserRecord* const> examples,
                                const UserRecord& target);
RenderedPrompt structure_prompt(PermMode mode, const UserRecord& target,
                                const NeighborOrdering& followers,
                                const NeighborOrdering& followings,
                                const SocialDataset& dataset);

RenderedPrompt zero_shot_rewrite_prompt(std::string_view description);
RenderedPrompt few_shot_rewrite_prompt(std::span<const std::string> examples,
                                       std::string_view description);
// Lists every (version, score) pair so far; scores printed with 2 decimals.
RenderedPrompt classifier_guidance_prompt(
    std::span<const TrajectoryStep> history);
RenderedPrompt text_attribute_summary_prompt(
    std::span<const std::string> bot_descriptions,
    std::span<const std::string> human_descriptions);
RenderedPrompt text_attribute_rewrite_prompt(std::string_view summary,
                                             std::string_view description);

// Candidates are numbered from 1 and the answer range is (1-k).
RenderedPrompt neighbor_add_prompt(const UserRecord& bot,
                                   std::span<const UserRecord* const> candidates);
RenderedPrompt neighbor_remove_prompt(
    const UserRecord& bot, std::span<const UserRecord* const> followings);

RenderedPrompt selective_combine_prompt(
    const UserRecord& bot, std::span<const UserRecord* const> followers,
    std::span<const UserRecord* const> followings);

RenderedPrompt similarity_judge_prompt(std::string_view original,
                                       std::string_view rewritten);

}  // namespace botarms

#include "botarms/prompts.h"

#include <array>

#include <fmt/format.h>

#include "botarms/error.h"

namespace botarms {

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kMetadata: return "metadata";
    case Modality::kText: return "text";
    case Modality::kMetaText: return "meta_text";
    case Modality::kStructRandom: return "struct_rand";
    case Modality::kStructAttention: return "struct_att";
    case Modality::kEnsemble: return "ensemble";
  }
  return "unknown";
}

std::optional<Modality> modality_from_string(std::string_view name) {
  for (Modality m : {Modality::kMetadata, Modality::kText, Modality::kMetaText,
                     Modality::kStructRandom, Modality::kStructAttention,
                     Modality::kEnsemble}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

constexpr std::string_view kTaskPrefix =
    "The following task focuses on evaluating whether a Twitter user is a bot "
    "or human with the help of ";
constexpr std::string_view kTaskSuffix =
    " You should output the label first and explanation after.";

const std::string& instruction_for(Modality modality) {
  static const std::array<std::string, 4> texts = {
      fmt::format("{}several labeled examples.{}", kTaskPrefix, kTaskSuffix),
      fmt::format("{}the user's self-written description.{}", kTaskPrefix,
                  kTaskSuffix),
      fmt::format("{}the user's self-written description and metadata.{}",
                  kTaskPrefix, kTaskSuffix),
      fmt::format("{}the user's followers and followings and their labels.{}",
                  kTaskPrefix, kTaskSuffix),
  };
  switch (modality) {
    case Modality::kMetadata: return texts[0];
    case Modality::kText: return texts[1];
    case Modality::kMetaText: return texts[2];
    case Modality::kStructRandom:
    case Modality::kStructAttention: return texts[3];
    case Modality::kEnsemble: break;
  }
  static const std::string none;
  return none;
}

Label example_label(const UserRecord& user) {
  if (!user.label) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("in-context example {} has no label", user.user_id));
  }
  return *user.label;
}

template <typename Render>
std::string labeled_examples(std::span<const UserRecord* const> examples,
                             Render render) {
  std::string out;
  for (const UserRecord* user : examples) {
    out += fmt::format("{}\nLabel: {}\n\n", render(*user),
                       to_string(example_label(*user)));
  }
  return out;
}

std::string joined_lines(std::span<const std::string> lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

// "header" alone when the body is empty, else "header\n\nbody".
std::string section(std::string_view header, std::string_view body) {
  if (body.empty()) return std::string(header);
  return fmt::format("{}\n\n{}", header, body);
}

std::string_view count_word(std::size_t k) {
  static constexpr std::array<std::string_view, 6> words = {
      "zero", "one", "two", "three", "four", "five"};
  return k < words.size() ? words[k] : std::string_view();
}

std::string numbered_users(std::span<const UserRecord* const> users) {
  std::string out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (i) out += '\n';
    out += fmt::format("user {}:\n{}", i + 1, render_user_block(*users[i]));
  }
  return out;
}

std::string neighbor_prompt(std::string_view lead, std::string_view list_header,
                            std::string_view verb, const UserRecord& bot,
                            std::span<const UserRecord* const> users) {
  if (users.empty() || users.size() > kMaxRenderedNeighbors) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("neighbor prompt needs 1..{} users, got {}",
                            kMaxRenderedNeighbors, users.size()));
  }
  return fmt::format(
      "{}\n\nTarget Bot:\n{}\n\n{}\n\n{}\n\nPlease select one user to {} "
      "(1-{}):",
      lead, render_user_block(bot), list_header, numbered_users(users), verb,
      users.size());
}

}  // namespace

std::string_view detector_instruction(Modality modality) {
  return instruction_for(modality);
}

RenderedPrompt metadata_prompt(std::span<const UserRecord* const> examples,
                               const UserRecord& target) {
  return {instruction_for(Modality::kMetadata),
          labeled_examples(examples,
                           [](const UserRecord& u) {
                             return verbalize_metadata(u);
                           }) +
              verbalize_metadata(target) + "\nLabel:"};
}

RenderedPrompt text_prompt(std::span<const LabeledText> examples,
                           std::string_view target_text) {
  std::string body;
  for (const auto& example : examples) {
    body += fmt::format("Description: {}\nLabel: {}\n\n", example.text,
                        to_string(example.label));
  }
  body += fmt::format("Description: {}\nLabel:", target_text);
  return {instruction_for(Modality::kText), std::move(body)};
}

RenderedPrompt meta_text_prompt(std::span<const UserRecord* const> examples,
                                const UserRecord& target) {
  return {instruction_for(Modality::kMetaText),
          labeled_examples(examples,
                           [](const UserRecord& u) {
                             return render_user_block(u);
                           }) +
              render_user_block(target) + "\nLabel:"};
}

RenderedPrompt structure_prompt(PermMode mode, const UserRecord& target,
                                const NeighborOrdering& followers,
                                const NeighborOrdering& followings,
                                const SocialDataset& dataset) {
  return {instruction_for(mode == PermMode::kRandom
                              ? Modality::kStructRandom
                              : Modality::kStructAttention),
          render_structure_block(target, followers, followings, mode, dataset)};
}

RenderedPrompt zero_shot_rewrite_prompt(std::string_view description) {
  return {"", fmt::format("Please rewrite the description of this bot account "
                          "to sound like a genuine user: {}\nNew Description:",
                          description)};
}

RenderedPrompt few_shot_rewrite_prompt(std::span<const std::string> examples,
                                       std::string_view description) {
  return {"Please rewrite the description of a target bot account to sound "
          "like a genuine user, based on the following examples of genuine "
          "user descriptions:",
          fmt::format("{}\n\nOriginal Description: {}\nNew Description:",
                      joined_lines(examples), description)};
}

RenderedPrompt classifier_guidance_prompt(
    std::span<const TrajectoryStep> history) {
  std::string listing;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) listing += '\n';
    listing += fmt::format("Description: {}\nScore: {:.2f}", history[i].text,
                           history[i].score);
  }
  return {"Below is a description of a Twitter user and its variants, paired "
          "with their score predicted by a bot classifier. The score is "
          "between 0 and 1, with 0 being human and 1 being bot. Please "
          "rewrite the description to make the user appear more human.",
          listing + "\n\nNew Description:"};
}

RenderedPrompt text_attribute_summary_prompt(
    std::span<const std::string> bot_descriptions,
    std::span<const std::string> human_descriptions) {
  return {"", fmt::format("{}\n\n{}\n\nCompare and give the key distinct "
                          "feature of human's descriptions:",
                          section("Bot Descriptions:",
                                  joined_lines(bot_descriptions)),
                          section("Human Description:",
                                  joined_lines(human_descriptions)))};
}

RenderedPrompt text_attribute_rewrite_prompt(std::string_view summary,
                                             std::string_view description) {
  return {std::string(summary),
          fmt::format("Based on the description, paraphrase this to human "
                      "description:\nBot: {}\nHuman:",
                      description)};
}

RenderedPrompt neighbor_add_prompt(
    const UserRecord& bot, std::span<const UserRecord* const> candidates) {
  const std::size_t k = candidates.size();
  std::string lead = fmt::format(
      "Below is a target Twitter bot and {} potential new {} to follow. "
      "Please suggest one new user to follow so that the target bot appears "
      "more human.",
      count_word(k), k == 1 ? "user" : "users");
  return {"", neighbor_prompt(lead, "Potential Followings:", "follow", bot,
                              candidates)};
}

RenderedPrompt neighbor_remove_prompt(
    const UserRecord& bot, std::span<const UserRecord* const> followings) {
  const std::size_t k = followings.size();
  std::string lead = fmt::format(
      "Below is a target Twitter bot and {} potential {} to unfollow. Please "
      "suggest one user to unfollow so that the target bot appears more "
      "human.",
      count_word(k), k == 1 ? "user" : "users");
  return {"", neighbor_prompt(lead, "Potential users to unfollow:", "unfollow",
                              bot, followings)};
}

RenderedPrompt selective_combine_prompt(
    const UserRecord& bot, std::span<const UserRecord* const> followers,
    std::span<const UserRecord* const> followings) {
  auto lines = [](std::span<const UserRecord* const> users) {
    std::string out;
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (i) out += '\n';
      out += render_user_line(*users[i]);
    }
    return out;
  };
  return {
      "Twitter's bot detection models take into account various user "
      "attributes, such as the use of default avatars, location, length of "
      "self-introduction, and more. They also analyze the user's tweet "
      "history, as well as the users they follow and are followed by, in "
      "order to determine whether the account is a bot. Furthermore, certain "
      "detection methods focus on the posting behavior of users under "
      "specific tags, aiming to identify groups with highly similar posting "
      "patterns. Additionally, there are approaches that consider the social "
      "network formed by a user, utilizing graph theory methods for "
      "detection.",
      fmt::format(
          "Please evaluate why the target user is a bot: does the description "
          "or follower/following list of the target user look suspicious?"
          "\n\n{}\n\n{}\n\n{}\n\nDescription or follower/following list, "
          "which is more suspicious?\nA. Description B. Follower/Following "
          "List C. Both are suspicious\nAnswer:",
          section("Target User:", render_user_block(bot)),
          section("These users follow the target user:", lines(followers)),
          section("The target user follows these users:", lines(followings)))};
}

RenderedPrompt similarity_judge_prompt(std::string_view original,
                                       std::string_view rewritten) {
  return {"For the following two posts of social media users, how similar "
          "are they in content? Answer with a single number on a 4-point "
          "Likert scale from 1: very different to 4: very similar.",
          fmt::format("Post 1: {}\nPost 2: {}\n\nAnswer:", original,
                      rewritten)};
}

}  // namespace botarms

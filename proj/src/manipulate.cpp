#include "botarms/manipulate.h"

#include <algorithm>
#include <array>
#include <cctype>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "botarms/linearize.h"
#include "botarms/parallel.h"
#include "botarms/prompts.h"
#include "botarms/rng.h"

namespace botarms {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 9> kStrategyNames{{
    {Strategy::kZeroShot, "zero_shot"},
    {Strategy::kFewShot, "few_shot"},
    {Strategy::kClassifierGuide, "classifier_guide"},
    {Strategy::kTextAttribute, "text_attribute"},
    {Strategy::kAddNeighbor, "add_neighbor"},
    {Strategy::kRemoveNeighbor, "remove_neighbor"},
    {Strategy::kCombineNeighbor, "combine_neighbor"},
    {Strategy::kSelectiveCombine, "selective_combine"},
    {Strategy::kBothCombine, "both_combine"},
}};

constexpr std::array<Strategy, 9> kAllStrategies = {
    Strategy::kZeroShot,        Strategy::kFewShot,
    Strategy::kClassifierGuide, Strategy::kTextAttribute,
    Strategy::kAddNeighbor,     Strategy::kRemoveNeighbor,
    Strategy::kCombineNeighbor, Strategy::kSelectiveCombine,
    Strategy::kBothCombine,
};

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

bool is_ascii_alpha(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

void require_description(const UserRecord& bot) {
  if (trim(bot.description).empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("bot {} has no description to rewrite", bot.user_id));
  }
}

Completion ask(LlmGateway& gateway, const RenderedPrompt& prompt,
               const AttackSettings& settings, int max_tokens) {
  CompletionRequest request;
  request.prompt = prompt.text();
  request.temperature = settings.temperature;
  request.max_tokens = max_tokens;
  request.backend = settings.backend;
  return gateway.complete(request);
}

std::string rewrite_text(LlmGateway& gateway, const RenderedPrompt& prompt,
                         const AttackSettings& settings,
                         const UserRecord& bot) {
  std::string text =
      trim(ask(gateway, prompt, settings, settings.max_tokens).text);
  if (text.empty()) {
    throw Error(ErrorCode::kRewriteFailed,
                fmt::format("empty rewrite for {}", bot.user_id));
  }
  return text;
}

std::vector<std::string> retrieved_texts(const Bm25Index& index,
                                         std::string_view query, std::size_t n,
                                         std::string_view exclude) {
  std::vector<std::string> out;
  for (const auto& hit : index.top_n(query, n, exclude)) {
    out.push_back(index.text(hit.doc_id));
  }
  return out;
}

TextRewrite description_rewrite(const UserRecord& bot, std::string new_text) {
  TextRewrite rewrite;
  rewrite.user_id = bot.user_id;
  rewrite.old_text = bot.description;
  rewrite.new_text = std::move(new_text);
  return rewrite;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  for (const auto& [s, name] : kStrategyNames) {
    if (s == strategy) return name;
  }
  return "unknown";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  for (const auto& [s, n] : kStrategyNames) {
    if (n == name) return s;
  }
  return std::nullopt;
}

std::span<const Strategy> all_strategies() { return kAllStrategies; }

std::string_view to_string(Suspicion suspicion) {
  switch (suspicion) {
    case Suspicion::kTextOnly: return "text";
    case Suspicion::kGraphOnly: return "graph";
    case Suspicion::kBoth: return "both";
  }
  return "both";
}

TextRewrite rewrite_zero_shot(const UserRecord& bot, LlmGateway& gateway,
                              const AttackSettings& settings) {
  require_description(bot);
  return description_rewrite(
      bot, rewrite_text(gateway, zero_shot_rewrite_prompt(bot.description),
                        settings, bot));
}

TextRewrite rewrite_few_shot(const UserRecord& bot, const Bm25Index& human_index,
                             std::size_t n, LlmGateway& gateway,
                             const AttackSettings& settings) {
  require_description(bot);
  if (human_index.empty()) {
    throw Error(ErrorCode::kInsufficientData,
                "few-shot rewriting needs human training descriptions");
  }
  const auto examples =
      retrieved_texts(human_index, bot.description, n, bot.user_id);
  return description_rewrite(
      bot,
      rewrite_text(gateway, few_shot_rewrite_prompt(examples, bot.description),
                   settings, bot));
}

TextRewrite rewrite_classifier_guided(const UserRecord& bot,
                                      const BotScorer& scorer,
                                      LlmGateway& gateway,
                                      const AttackSettings& settings) {
  require_description(bot);
  if (settings.iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "classifier guidance needs at least one iteration");
  }
  GuidanceTrajectory trajectory;
  auto score_version = [&](std::string text) {
    double score = 0.0;
    try {
      score = scorer.score(text);
    } catch (const std::exception& e) {
      throw GuidanceError(ErrorCode::kRewriteFailed,
                          fmt::format("scorer failed on version {} of {}: {}",
                                      trajectory.size(), bot.user_id, e.what()),
                          trajectory);
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw GuidanceError(
          ErrorCode::kRewriteFailed,
          fmt::format("scorer returned {} outside [0,1] for {}", score,
                      bot.user_id),
          trajectory);
    }
    trajectory.push_back({std::move(text), score});
  };

  score_version(bot.description);
  for (int i = 0; i < settings.iterations; ++i) {
    std::string next;
    try {
      next = rewrite_text(gateway, classifier_guidance_prompt(trajectory),
                          settings, bot);
    } catch (const Error& e) {
      throw GuidanceError(e.code(), e.what(), trajectory);
    }
    score_version(std::move(next));
  }

  std::size_t pick = trajectory.size() - 1;
  if (settings.selection == GuidanceSelection::kMinScore) {
    pick = 0;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
      if (trajectory[i].score < trajectory[pick].score) pick = i;
    }
  }
  TextRewrite rewrite = description_rewrite(bot, trajectory[pick].text);
  rewrite.trajectory = std::move(trajectory);
  return rewrite;
}

TextRewrite rewrite_text_attribute(const UserRecord& bot,
                                   const Bm25Index& human_index,
                                   const Bm25Index& bot_index, std::size_t n,
                                   LlmGateway& gateway,
                                   const AttackSettings& settings) {
  require_description(bot);
  if (human_index.empty() || bot_index.empty()) {
    throw Error(ErrorCode::kInsufficientData,
                "text attributes need both human and bot training descriptions");
  }
  const auto bots =
      retrieved_texts(bot_index, bot.description, n, bot.user_id);
  const auto humans =
      retrieved_texts(human_index, bot.description, n, bot.user_id);
  const std::string summary = trim(
      ask(gateway, text_attribute_summary_prompt(bots, humans), settings,
          settings.max_tokens)
          .text);
  if (summary.empty()) {
    throw Error(ErrorCode::kRewriteFailed,
                fmt::format("empty attribute summary for {}", bot.user_id));
  }
  return description_rewrite(
      bot, rewrite_text(gateway,
                        text_attribute_rewrite_prompt(summary, bot.description),
                        settings, bot));
}

std::optional<std::size_t> parse_choice_index(std::string_view text,
                                              std::size_t k) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  const auto begin = std::find_if(text.begin(), text.end(), is_digit);
  if (begin == text.end()) return std::nullopt;
  const auto end = std::find_if_not(begin, text.end(), is_digit);
  std::string_view digits(&*begin, static_cast<std::size_t>(end - begin));
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  if (digits.size() > 6) return std::nullopt;
  std::size_t value = 0;
  for (char c : digits) value = value * 10 + static_cast<std::size_t>(c - '0');
  if (value < 1 || value > k) return std::nullopt;
  return value;
}

std::vector<const UserRecord*> pick_add_candidates(const SocialDataset& dataset,
                                                   const UserRecord& bot,
                                                   std::size_t k,
                                                   std::uint64_t seed) {
  std::vector<const UserRecord*> pool;
  for (const auto& [id, user] : dataset.users()) {
    if (id != bot.user_id && !dataset.has_edge(bot.user_id, id)) {
      pool.push_back(&user);
    }
  }
  Rng rng(derive_seed(seed, "candidates", bot.user_id));
  const std::size_t take = std::min(k, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

AddFollow suggest_add(const UserRecord& bot,
                      std::span<const UserRecord* const> candidates,
                      const SocialDataset& dataset, LlmGateway& gateway,
                      const AttackSettings& settings) {
  for (const UserRecord* c : candidates) {
    if (c->user_id == bot.user_id || dataset.has_edge(bot.user_id, c->user_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("add candidate {} is the bot or already followed",
                              c->user_id));
    }
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("no users left for {} to follow", bot.user_id));
  }
  const Completion reply = ask(gateway, neighbor_add_prompt(bot, candidates),
                               settings, settings.choice_max_tokens);
  const auto choice = parse_choice_index(reply.text, candidates.size());
  if (!choice) {
    throw Error(ErrorCode::kSuggestionFailed,
                fmt::format("no index in 1-{} in add answer \"{}\"",
                            candidates.size(), trim(reply.text)));
  }
  return {bot.user_id, candidates[*choice - 1]->user_id};
}

RemoveFollow suggest_remove(const UserRecord& bot, const SocialDataset& dataset,
                            LlmGateway& gateway,
                            const AttackSettings& settings) {
  std::vector<const UserRecord*> followings =
      neighbor_sets(dataset, bot.user_id).followings;
  if (followings.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("bot {} follows nobody", bot.user_id));
  }
  if (followings.size() > kMaxRenderedNeighbors) {
    followings.resize(kMaxRenderedNeighbors);
  }
  const Completion reply = ask(gateway, neighbor_remove_prompt(bot, followings),
                               settings, settings.choice_max_tokens);
  const auto choice = parse_choice_index(reply.text, followings.size());
  if (!choice) {
    throw Error(ErrorCode::kSuggestionFailed,
                fmt::format("no index in 1-{} in remove answer \"{}\"",
                            followings.size(), trim(reply.text)));
  }
  return {bot.user_id, followings[*choice - 1]->user_id};
}

namespace {

bool aborts_batch(ErrorCode code) {
  return code == ErrorCode::kReplayMiss || code == ErrorCode::kConfig ||
         code == ErrorCode::kCacheIntegrity;
}

}  // namespace

CombineOutcome combine_neighbor(const UserRecord& bot,
                                std::span<const UserRecord* const> candidates,
                                const SocialDataset& dataset,
                                LlmGateway& gateway,
                                const AttackSettings& settings) {
  CombineOutcome outcome;
  try {
    outcome.add = suggest_add(bot, candidates, dataset, gateway, settings);
  } catch (const Error& e) {
    if (aborts_batch(e.code())) throw;
    outcome.failures.push_back({"add", e.what()});
  }
  try {
    outcome.remove = suggest_remove(bot, dataset, gateway, settings);
  } catch (const Error& e) {
    if (aborts_batch(e.code())) throw;
    outcome.failures.push_back({"remove", e.what()});
  }
  return outcome;
}

std::optional<Suspicion> parse_suspicion(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != 'A' && c != 'B' && c != 'C') continue;
    if (i > 0 && is_ascii_alpha(text[i - 1])) continue;
    if (i + 1 < text.size() && is_ascii_alpha(text[i + 1])) continue;
    if (c == 'A') return Suspicion::kTextOnly;
    if (c == 'B') return Suspicion::kGraphOnly;
    return Suspicion::kBoth;
  }
  return std::nullopt;
}

ModalityChoice select_modality(const UserRecord& bot,
                               const SocialDataset& dataset,
                               LlmGateway& gateway,
                               const AttackSettings& settings) {
  Neighborhood hood = neighbor_sets(dataset, bot.user_id);
  if (hood.followers.size() > kMaxRenderedNeighbors) {
    hood.followers.resize(kMaxRenderedNeighbors);
  }
  if (hood.followings.size() > kMaxRenderedNeighbors) {
    hood.followings.resize(kMaxRenderedNeighbors);
  }
  const Completion reply =
      ask(gateway, selective_combine_prompt(bot, hood.followers, hood.followings),
          settings, settings.choice_max_tokens);
  ModalityChoice choice;
  if (auto parsed = parse_suspicion(reply.text)) {
    choice.suspicion = *parsed;
  } else {
    choice.defaulted = true;
  }
  return choice;
}

namespace {

struct TargetOutcome {
  std::vector<Edit> edits;
  std::vector<AttackFailure> failures;
};

class TargetAttack {
 public:
  TargetAttack(Strategy strategy, const SocialDataset& dataset,
               const Bm25Index& human_index, const Bm25Index& bot_index,
               LlmGateway& gateway, const BotScorer* scorer,
               const AttackSettings& settings, const UserRecord& bot,
               TargetOutcome& out)
      : strategy_(strategy),
        dataset_(dataset),
        human_index_(human_index),
        bot_index_(bot_index),
        gateway_(gateway),
        scorer_(scorer),
        settings_(settings),
        bot_(bot),
        out_(out) {}

  void run() {
    switch (strategy_) {
      case Strategy::kZeroShot:
      case Strategy::kFewShot:
      case Strategy::kClassifierGuide:
      case Strategy::kTextAttribute:
        text(strategy_, {});
        break;
      case Strategy::kAddNeighbor:
        guarded("add", [&] {
          const auto candidates = candidates_for_add();
          push(suggest_add(bot_, candidates, dataset_, gateway_, settings_),
               {{"candidates", ids(candidates)}});
        });
        break;
      case Strategy::kRemoveNeighbor:
        guarded("remove", [&] {
          push(suggest_remove(bot_, dataset_, gateway_, settings_), {});
        });
        break;
      case Strategy::kCombineNeighbor:
        graph({});
        break;
      case Strategy::kSelectiveCombine: {
        std::optional<ModalityChoice> choice;
        guarded("select", [&] {
          choice = select_modality(bot_, dataset_, gateway_, settings_);
        });
        if (!choice) break;
        std::map<std::string, std::string> meta{
            {"suspicion", std::string(to_string(choice->suspicion))}};
        if (choice->defaulted) meta["suspicion_defaulted"] = "true";
        if (choice->suspicion != Suspicion::kGraphOnly) {
          text(Strategy::kClassifierGuide, meta);
        }
        if (choice->suspicion != Suspicion::kTextOnly) graph(meta);
        break;
      }
      case Strategy::kBothCombine:
        text(Strategy::kClassifierGuide, {});
        graph({});
        break;
    }
  }

 private:
  template <typename Fn>
  void guarded(std::string_view stage, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (aborts_batch(e.code())) throw;
      out_.failures.push_back({bot_.user_id, std::string(stage), e.what()});
    }
  }

  void push(EditChange change, std::map<std::string, std::string> meta) {
    out_.edits.push_back({std::move(change), std::string(to_string(strategy_)),
                          settings_.seed, std::move(meta)});
  }

  static std::string ids(std::span<const UserRecord* const> users) {
    std::vector<std::string_view> names;
    for (const UserRecord* u : users) names.push_back(u->user_id);
    return fmt::format("{}", fmt::join(names, ","));
  }

  std::vector<const UserRecord*> candidates_for_add() const {
    return pick_add_candidates(dataset_, bot_, settings_.add_candidates,
                               settings_.seed);
  }

  void text(Strategy method, std::map<std::string, std::string> meta) {
    guarded("rewrite", [&] {
      TextRewrite rewrite;
      switch (method) {
        case Strategy::kZeroShot:
          rewrite = rewrite_zero_shot(bot_, gateway_, settings_);
          break;
        case Strategy::kFewShot:
          rewrite = rewrite_few_shot(bot_, human_index_,
                                     settings_.retrieval_count, gateway_,
                                     settings_);
          break;
        case Strategy::kTextAttribute:
          rewrite = rewrite_text_attribute(bot_, human_index_, bot_index_,
                                           settings_.retrieval_count, gateway_,
                                           settings_);
          break;
        default:
          if (!scorer_) {
            throw Error(ErrorCode::kConfig,
                        "classifier guidance needs a configured scorer");
          }
          rewrite =
              rewrite_classifier_guided(bot_, *scorer_, gateway_, settings_);
          break;
      }
      if (rewrite.is_noop()) meta["noop"] = "true";
      push(std::move(rewrite), std::move(meta));
    });
  }

  void graph(const std::map<std::string, std::string>& meta) {
    std::vector<const UserRecord*> candidates;
    guarded("add", [&] { candidates = candidates_for_add(); });
    CombineOutcome outcome =
        combine_neighbor(bot_, candidates, dataset_, gateway_, settings_);
    if (outcome.add) {
      auto m = meta;
      m["candidates"] = ids(candidates);
      push(*outcome.add, std::move(m));
    }
    if (outcome.remove) push(*outcome.remove, meta);
    for (auto& f : outcome.failures) {
      out_.failures.push_back({bot_.user_id, f.stage, std::move(f.message)});
    }
  }

  Strategy strategy_;
  const SocialDataset& dataset_;
  const Bm25Index& human_index_;
  const Bm25Index& bot_index_;
  LlmGateway& gateway_;
  const BotScorer* scorer_;
  const AttackSettings& settings_;
  const UserRecord& bot_;
  TargetOutcome& out_;
};

bool needs_scorer(Strategy strategy) {
  return strategy == Strategy::kClassifierGuide ||
         strategy == Strategy::kSelectiveCombine ||
         strategy == Strategy::kBothCombine;
}

}  // namespace

AttackResult run_strategy(Strategy strategy, const SocialDataset& dataset,
                          std::span<const std::string> targets,
                          LlmGateway& gateway, const BotScorer* scorer,
                          const AttackSettings& settings,
                          std::size_t workers) {
  std::vector<std::string> ids(targets.begin(), targets.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const auto& id : ids) {
    if (!dataset.contains(id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("attack target {} is not in the dataset", id));
    }
    if (dataset.user(id).label != Label::kBot) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("attack target {} is not labeled bot", id));
    }
  }
  if (!ids.empty() && needs_scorer(strategy) && !scorer) {
    throw Error(ErrorCode::kConfig,
                fmt::format("strategy {} needs a configured scorer",
                            to_string(strategy)));
  }

  const Bm25Index human_index = build_description_index(dataset, Label::kHuman);
  const Bm25Index bot_index = build_description_index(dataset, Label::kBot);

  std::vector<TargetOutcome> outcomes(ids.size());
  parallel_for(ids.size(), workers, [&](std::size_t i) {
    TargetAttack(strategy, dataset, human_index, bot_index, gateway, scorer,
                 settings, dataset.user(ids[i]), outcomes[i])
        .run();
  });

  AttackResult result{{}, {}, {}};
  for (auto& outcome : outcomes) {
    for (auto& edit : outcome.edits) result.log.edits.push_back(std::move(edit));
    for (auto& f : outcome.failures) result.failures.push_back(std::move(f));
  }
  result.dataset = apply_edits(dataset, result.log);
  return result;
}

}  // namespace botarms

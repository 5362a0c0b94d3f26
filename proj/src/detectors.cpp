#include "botarms/detectors.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"
#include "botarms/parallel.h"
#include "botarms/rng.h"

namespace botarms {

using json = nlohmann::json;

ParsedLabel parse_label(const Completion& completion) {
  std::string_view text = completion.text;
  auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t begin = 0;
  while (begin < text.size() && is_space(text[begin])) ++begin;
  std::size_t end = begin;
  while (end < text.size() && !is_space(text[end])) ++end;
  std::string token(text.substr(begin, end - begin));
  for (char& c : token) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  ParsedLabel parsed;
  if (token.starts_with("bot")) {
    parsed.label = Label::kBot;
  } else if (token.starts_with("human")) {
    parsed.label = Label::kHuman;
  } else {
    throw Error(ErrorCode::kUnparseableLabel,
                fmt::format("no label in completion \"{}\"",
                            completion.text.substr(0, 80)));
  }
  if (completion.first_token_prob) {
    parsed.confidence = *completion.first_token_prob;
  } else {
    parsed.confidence = 1.0;
    parsed.degenerate = true;
  }
  return parsed;
}

DetectorEnvironment::DetectorEnvironment(const SocialDataset& dataset,
                                         const Embedder* embedder)
    : dataset_(&dataset),
      index_(build_description_index(dataset)),
      embedder_(embedder) {}

namespace {

[[noreturn]] void missing(Modality modality, std::string_view ingredient) {
  throw Error(ErrorCode::kInvalidArgument,
              fmt::format("{} prompt needs {}", to_string(modality), ingredient));
}

PermMode perm_mode(Modality modality) {
  return modality == Modality::kStructAttention ? PermMode::kAttention
                                                : PermMode::kRandom;
}

}  // namespace

RenderedPrompt render_detector_prompt(Modality modality,
                                      const UserRecord& target,
                                      const PromptContext& context) {
  switch (modality) {
    case Modality::kMetadata:
      if (!context.examples) missing(modality, "in-context examples");
      return metadata_prompt(*context.examples, target);
    case Modality::kMetaText:
      if (!context.examples) missing(modality, "in-context examples");
      return meta_text_prompt(*context.examples, target);
    case Modality::kText:
      if (!context.retrieved) missing(modality, "retrieved descriptions");
      if (!context.target_text) missing(modality, "a target text");
      return text_prompt(*context.retrieved, *context.target_text);
    case Modality::kStructRandom:
    case Modality::kStructAttention:
      if (!context.followers) missing(modality, "a follower ordering");
      if (!context.followings) missing(modality, "a following ordering");
      if (!context.dataset) missing(modality, "the dataset for neighbor labels");
      return structure_prompt(perm_mode(modality), target, *context.followers,
                              *context.followings, *context.dataset);
    case Modality::kEnsemble:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "the ensemble has no prompt");
}

PromptContext build_prompt_context(Modality modality, const UserRecord& target,
                                   const DetectorEnvironment& env,
                                   const DetectorSettings& settings,
                                   std::optional<std::string> target_text) {
  const SocialDataset& dataset = env.dataset();
  PromptContext context;
  context.dataset = &dataset;
  switch (modality) {
    case Modality::kMetadata:
    case Modality::kMetaText:
      context.examples = sample_balanced(
          dataset, settings.icl_count,
          derive_seed(settings.seed, "sampling", target.user_id),
          target.user_id);
      break;
    case Modality::kText: {
      if (!target_text) missing(modality, "a target text");
      const std::size_t n = settings.retrieval_count.value_or(settings.icl_count);
      std::vector<LabeledText> retrieved;
      const Bm25Index& index = env.description_index();
      if (n > 0 && !index.empty()) {
        for (const auto& hit : index.top_n(*target_text, n, target.user_id)) {
          retrieved.push_back(
              {index.text(hit.doc_id), *dataset.user(hit.doc_id).label});
        }
      }
      context.retrieved = std::move(retrieved);
      context.target_text = std::move(target_text);
      break;
    }
    case Modality::kStructRandom:
    case Modality::kStructAttention: {
      const PermMode mode = perm_mode(modality);
      const Neighborhood hood = neighbor_sets(dataset, target.user_id);
      context.followers = permute_neighbors(
          target, hood.followers, mode,
          derive_seed(settings.seed, "perm", target.user_id + "/followers"),
          env.embedder(), settings.neighbor_cap);
      context.followings = permute_neighbors(
          target, hood.followings, mode,
          derive_seed(settings.seed, "perm", target.user_id + "/followings"),
          env.embedder(), settings.neighbor_cap);
      break;
    }
    case Modality::kEnsemble:
      throw Error(ErrorCode::kInvalidArgument, "the ensemble has no prompt");
  }
  return context;
}

std::vector<std::string> text_items(const UserRecord& user,
                                    std::size_t max_posts) {
  auto blank = [](const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
  };
  std::vector<std::string> items;
  if (!blank(user.description)) items.push_back(user.description);
  for (std::size_t i = 0; i < user.posts.size() && i < max_posts; ++i) {
    if (!blank(user.posts[i])) items.push_back(user.posts[i]);
  }
  return items;
}

namespace {

CompletionRequest label_request(const RenderedPrompt& prompt,
                                const DetectorSettings& settings) {
  CompletionRequest request;
  request.prompt = prompt.text();
  request.temperature = settings.temperature;
  request.max_tokens = settings.max_tokens;
  request.want_token_probs = settings.want_token_probs;
  request.backend = settings.backend;
  return request;
}

}  // namespace

Prediction predict_modality(Modality modality, const UserRecord& target,
                            const DetectorEnvironment& env,
                            LlmGateway& gateway,
                            const DetectorSettings& settings) {
  if (modality == Modality::kEnsemble) {
    throw Error(ErrorCode::kInvalidArgument,
                "use ensemble() to combine modality predictions");
  }
  Prediction prediction;
  prediction.user_id = target.user_id;
  prediction.modality = modality;

  if (modality != Modality::kText) {
    const PromptContext context =
        build_prompt_context(modality, target, env, settings);
    const Completion completion = gateway.complete(
        label_request(render_detector_prompt(modality, target, context),
                      settings));
    prediction.cache_keys.push_back(completion.cache_key);
    try {
      const ParsedLabel parsed = parse_label(completion);
      prediction.label = parsed.label;
      prediction.confidence = parsed.confidence;
      prediction.degenerate = parsed.degenerate;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnparseableLabel) throw;
    }
    return prediction;
  }

  std::size_t bots = 0, humans = 0;
  for (const auto& item : text_items(target, settings.text_posts)) {
    const PromptContext context =
        build_prompt_context(modality, target, env, settings, item);
    const Completion completion = gateway.complete(
        label_request(render_detector_prompt(modality, target, context),
                      settings));
    prediction.cache_keys.push_back(completion.cache_key);
    try {
      const ParsedLabel parsed = parse_label(completion);
      (parsed.label == Label::kBot ? bots : humans) += 1;
      prediction.degenerate = prediction.degenerate || parsed.degenerate;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnparseableLabel) throw;
    }
  }
  const std::size_t voters = bots + humans;
  if (voters == 0) {
    prediction.degenerate = false;
    return prediction;
  }
  prediction.label = bots > humans ? Label::kBot : Label::kHuman;
  prediction.tie = bots == humans;
  prediction.confidence = static_cast<double>(std::max(bots, humans)) /
                          static_cast<double>(voters);
  return prediction;
}

Prediction ensemble(std::span<const Prediction> predictions) {
  if (predictions.size() != kDetectorModalities.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("ensemble needs {} predictions, got {}",
                            kDetectorModalities.size(), predictions.size()));
  }
  Prediction out;
  out.user_id = predictions.front().user_id;
  out.modality = Modality::kEnsemble;
  std::set<Modality> seen;
  std::size_t bots = 0, humans = 0;
  for (const auto& p : predictions) {
    if (p.modality == Modality::kEnsemble || !seen.insert(p.modality).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ensemble needs one prediction per detector modality");
    }
    if (p.user_id != out.user_id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ensemble inputs disagree on the user");
    }
    out.voters[p.modality] = p.label;
    out.cache_keys.insert(out.cache_keys.end(), p.cache_keys.begin(),
                          p.cache_keys.end());
    out.degenerate = out.degenerate || p.degenerate;
    if (p.label) (*p.label == Label::kBot ? bots : humans) += 1;
  }
  const std::size_t voters = bots + humans;
  if (voters == 0) {
    out.degenerate = false;
    return out;
  }
  out.label = bots > humans ? Label::kBot : Label::kHuman;
  out.tie = bots == humans;
  out.confidence =
      static_cast<double>(std::max(bots, humans)) / static_cast<double>(voters);
  return out;
}

DetectionRun detect_users(std::span<const std::string> target_ids,
                          std::span<const Modality> modalities,
                          const DetectorEnvironment& env, LlmGateway& gateway,
                          const DetectorSettings& settings,
                          std::size_t workers) {
  std::vector<Modality> requested;
  for (Modality m : modalities) {
    if (m == Modality::kEnsemble) continue;
    if (std::find(requested.begin(), requested.end(), m) == requested.end()) {
      requested.push_back(m);
    }
  }
  const bool with_ensemble = std::all_of(
      kDetectorModalities.begin(), kDetectorModalities.end(), [&](Modality m) {
        return std::find(requested.begin(), requested.end(), m) !=
               requested.end();
      });

  struct Slot {
    std::vector<Prediction> predictions;
    std::vector<DetectionFailure> failures;
  };
  std::vector<Slot> slots(target_ids.size());
  parallel_for(target_ids.size(), workers, [&](std::size_t i) {
    const UserRecord& target = env.dataset().user(target_ids[i]);
    Slot& slot = slots[i];
    for (Modality m : requested) {
      try {
        slot.predictions.push_back(
            predict_modality(m, target, env, gateway, settings));
      } catch (const Error& e) {
        switch (e.code()) {
          case ErrorCode::kTransport:
          case ErrorCode::kInsufficientData:
          case ErrorCode::kDegenerateInput:
          case ErrorCode::kNotFound: {
            Prediction abstain;
            abstain.user_id = target.user_id;
            abstain.modality = m;
            slot.predictions.push_back(std::move(abstain));
            slot.failures.push_back({target.user_id, m, e.what()});
            break;
          }
          default:
            throw;
        }
      }
    }
    if (with_ensemble) {
      std::vector<Prediction> voters;
      for (Modality m : kDetectorModalities) {
        for (const auto& p : slot.predictions) {
          if (p.modality == m) voters.push_back(p);
        }
      }
      slot.predictions.push_back(ensemble(voters));
    }
  });

  DetectionRun run;
  for (auto& slot : slots) {
    for (auto& p : slot.predictions) run.predictions.push_back(std::move(p));
    for (auto& f : slot.failures) run.failures.push_back(std::move(f));
  }
  return run;
}

void write_predictions(std::span<const Prediction> predictions,
                       std::ostream& out) {
  for (const auto& p : predictions) {
    json voters = json::object();
    for (const auto& [m, label] : p.voters) {
      voters[std::string(to_string(m))] =
          label ? json(to_string(*label)) : json(nullptr);
    }
    json j{{"user_id", p.user_id},
           {"modality", to_string(p.modality)},
           {"label", p.label ? json(to_string(*p.label)) : json(nullptr)},
           {"confidence", p.confidence},
           {"degenerate", p.degenerate},
           {"tie", p.tie},
           {"voters", voters},
           {"cache_keys", p.cache_keys}};
    out << j.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  auto parse_optional_label = [](const json& v) -> std::optional<Label> {
    if (v.is_null()) return std::nullopt;
    auto label = label_from_string(v.get<std::string>());
    if (!label) throw Error(ErrorCode::kParse, "unknown label");
    return label;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Prediction p;
      p.user_id = j.at("user_id").get<std::string>();
      auto modality = modality_from_string(j.at("modality").get<std::string>());
      if (!modality) throw Error(ErrorCode::kParse, "unknown modality");
      p.modality = *modality;
      p.label = parse_optional_label(j.at("label"));
      p.confidence = j.at("confidence").get<double>();
      p.degenerate = j.value("degenerate", false);
      p.tie = j.value("tie", false);
      if (j.contains("voters")) {
        for (const auto& [name, v] : j.at("voters").items()) {
          auto m = modality_from_string(name);
          if (!m) throw Error(ErrorCode::kParse, "unknown voter modality");
          p.voters[*m] = parse_optional_label(v);
        }
      }
      if (j.contains("cache_keys")) {
        p.cache_keys = j.at("cache_keys").get<std::vector<std::string>>();
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("predictions line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("predictions line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("cannot open predictions {}", path.string()));
  }
  return read_predictions(in);
}

}  // namespace botarms

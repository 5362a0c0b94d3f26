#include "botarms/tuning_export.h"

#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"
#include "botarms/rng.h"

namespace botarms {

using json = nlohmann::json;

std::vector<TuningTriple> export_tuning_triples(
    const SocialDataset& dataset, Modality modality, std::size_t count,
    std::uint64_t seed, const Embedder* embedder,
    const DetectorSettings& settings) {
  if (modality == Modality::kEnsemble) {
    throw Error(ErrorCode::kInvalidArgument,
                "tuning triples need a single detector modality");
  }
  std::vector<const UserRecord*> pool = dataset.users_in_split(Split::kTrain);
  if (count > pool.size()) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("requested {} triples but the training split has "
                            "{} users",
                            count, pool.size()));
  }
  Rng rng(derive_seed(seed, "sampling", "tuning_export"));
  rng.shuffle(std::span(pool));
  pool.resize(count);

  const DetectorEnvironment env(dataset, embedder);
  DetectorSettings local = settings;
  local.seed = seed;
  std::vector<TuningTriple> triples;
  triples.reserve(count);
  for (const UserRecord* user : pool) {
    if (!user->label) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("user {} has no label", user->user_id));
    }
    std::optional<std::string> target_text;
    if (modality == Modality::kText) target_text = representative_text(*user);
    const PromptContext context =
        build_prompt_context(modality, *user, env, local, target_text);
    RenderedPrompt prompt = render_detector_prompt(modality, *user, context);
    triples.push_back({std::move(prompt.instruction), std::move(prompt.body),
                       std::string(to_string(*user->label))});
  }
  return triples;
}

void write_tuning_triples(std::span<const TuningTriple> triples,
                          Modality modality, std::uint64_t seed,
                          std::ostream& out) {
  out << json{{"format", "tuning_triples"},
              {"modality", to_string(modality)},
              {"count", triples.size()},
              {"seed", seed}}
             .dump()
      << '\n';
  for (const auto& t : triples) {
    out << json{{"instruction", t.instruction},
                {"input", t.input},
                {"output", t.output}}
               .dump()
        << '\n';
  }
}

std::vector<TuningTriple> read_tuning_triples(std::istream& in) {
  std::vector<TuningTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!header) {
        if (j.value("format", "") != "tuning_triples") {
          throw Error(ErrorCode::kParse, "missing tuning_triples header");
        }
        header = true;
        continue;
      }
      triples.push_back({j.at("instruction").get<std::string>(),
                         j.at("input").get<std::string>(),
                         j.at("output").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("triples line {}: {}", line_no, e.what()));
    }
  }
  if (!header) throw Error(ErrorCode::kParse, "missing tuning_triples header");
  return triples;
}

}  // namespace botarms

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "botarms/dataset.h"
#include "botarms/linearize.h"
#include "botarms/llm_gateway.h"
#include "botarms/modality.h"
#include "botarms/prompts.h"
#include "botarms/retrieval.h"

namespace botarms {

struct Prediction {
  std::string user_id;
  Modality modality = Modality::kMetadata;
  // Empty when the detector abstained (no parseable completion).
  std::optional<Label> label;
  double confidence = 0.0;
  // Confidence is a placeholder rather than a probability (backend reported
  // no token probability); calibration reports skip these.
  bool degenerate = false;
  // The label was decided by the tie rule.
  bool tie = false;
  // Ensemble only: one entry per voting modality, empty on abstention.
  std::map<Modality, std::optional<Label>> voters;
  std::vector<std::string> cache_keys;

  bool abstained() const { return !label.has_value(); }
};

struct ParsedLabel {
  Label label = Label::kHuman;
  double confidence = 1.0;
  bool degenerate = false;
};

// The first whitespace-delimited token, lowercased, must start with "bot" or
// "human". Confidence is the first-token probability when present, else 1.0
// flagged degenerate. Throws kUnparseableLabel otherwise.
ParsedLabel parse_label(const Completion& completion);

struct DetectorSettings {
  std::size_t icl_count = 16;
  // BM25 examples per text-detector prompt; defaults to icl_count.
  std::optional<std::size_t> retrieval_count;
  // The text detector votes over the description plus this many leading posts.
  std::size_t text_posts = 4;
  std::size_t neighbor_cap = kMaxRenderedNeighbors;
  std::uint64_t seed = 0;
  std::string backend;
  double temperature = kDefaultTemperature;
  int max_tokens = kLabelMaxTokens;
  bool want_token_probs = true;
};

// Shared, read-only state for detecting on one dataset: the dataset itself,
// the BM25 index over training descriptions, and the embedder used by the
// attention ordering (may be null if struct_att is not run).
class DetectorEnvironment {
 public:
  DetectorEnvironment(const SocialDataset& dataset, const Embedder* embedder);

  const SocialDataset& dataset() const { return *dataset_; }
  const Bm25Index& description_index() const { return index_; }
  const Embedder* embedder() const { return embedder_; }

 private:
  const SocialDataset* dataset_;
  Bm25Index index_;
  const Embedder* embedder_;
};

// Ingredients a detector prompt may need; which ones are required depends on
// the modality.
struct PromptContext {
  std::optional<std::vector<const UserRecord*>> examples;
  std::optional<std::vector<LabeledText>> retrieved;
  std::optional<std::string> target_text;
  std::optional<NeighborOrdering> followers;
  std::optional<NeighborOrdering> followings;
  const SocialDataset* dataset = nullptr;
};

// Throws kInvalidArgument naming the missing ingredient.
RenderedPrompt render_detector_prompt(Modality modality,
                                      const UserRecord& target,
                                      const PromptContext& context);

// Assembles the context for one target: balanced examples (seeded per target)
// for metadata and meta_text, BM25-retrieved training descriptions for text
// (target_text must then be given), neighbor orderings for structure.
PromptContext build_prompt_context(
    Modality modality, const UserRecord& target, const DetectorEnvironment& env,
    const DetectorSettings& settings,
    std::optional<std::string> target_text = std::nullopt);

// The items the text detector votes over: non-blank description, then up to
// settings.text_posts posts.
std::vector<std::string> text_items(const UserRecord& user,
                                    std::size_t max_posts);

Prediction predict_modality(Modality modality, const UserRecord& target,
                            const DetectorEnvironment& env,
                            LlmGateway& gateway,
                            const DetectorSettings& settings);

// Majority over non-abstaining voters; ties go to human. Expects exactly the
// five detector modalities (kInvalidArgument otherwise).
Prediction ensemble(std::span<const Prediction> predictions);

struct DetectionFailure {
  std::string user_id;
  Modality modality = Modality::kMetadata;
  std::string message;
};

struct DetectionRun {
  std::vector<Prediction> predictions;
  // Transport or data failures that turned a prediction into an abstention.
  std::vector<DetectionFailure> failures;
};

// Predictions for every target on every requested modality, plus the ensemble
// row when all five detectors are requested. Output order: target order, then
// modality order. Replay misses and configuration errors abort the run.
DetectionRun detect_users(std::span<const std::string> target_ids,
                          std::span<const Modality> modalities,
                          const DetectorEnvironment& env, LlmGateway& gateway,
                          const DetectorSettings& settings,
                          std::size_t workers = 1);

void write_predictions(std::span<const Prediction> predictions,
                       std::ostream& out);
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

}  // namespace botarms

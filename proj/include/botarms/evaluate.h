#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "botarms/dataset.h"
#include "botarms/detectors.h"
#include "botarms/edit_log.h"
#include "botarms/llm_gateway.h"
#include "botarms/modality.h"

namespace botarms {

// Positive class is bot everywhere.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(Label predicted, Label gold);
  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // The denominator was zero and the value was set to 0 by convention.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

// Throws kInsufficientData when counts.total() == 0.
ClassificationMetrics metrics(const ConfusionCounts& counts);

struct ModalityScore {
  Modality modality = Modality::kMetadata;
  ConfusionCounts counts;
  std::size_t abstentions = 0;
  // Predictions whose user has no gold label in the dataset.
  std::size_t unlabeled = 0;
};

// One row per modality, in order of first appearance.
std::vector<ModalityScore> score_predictions(
    std::span<const Prediction> predictions, const SocialDataset& gold);

// TSV with a leading comment naming the positive class.
void write_metrics_tsv(std::span<const ModalityScore> scores,
                       std::ostream& out);

struct CalibrationInput {
  double confidence = 0.0;
  bool correct = false;
};

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  std::size_t n = 0;
};

// Bin b holds confidences in [b/bins, (b+1)/bins); the last bin also holds
// 1.0. ece = sum over bins of (count/n) * |accuracy - mean confidence|.
// Throws kInsufficientData on empty input and kInvalidArgument for a
// confidence outside [0, 1].
CalibrationReport ece(std::span<const CalibrationInput> inputs,
                      std::size_t bins = 10);

// kPredictedLabel bins the probability of the predicted label against
// "prediction correct". kBotLikelihood bins p(bot) (1 - p for human
// predictions) against "gold is bot".
enum class ConfidenceMode { kPredictedLabel, kBotLikelihood };
std::string_view to_string(ConfidenceMode mode);
std::optional<ConfidenceMode> confidence_mode_from_string(std::string_view name);

struct CalibrationSelection {
  std::vector<CalibrationInput> inputs;
  std::size_t degenerate = 0;
  // Abstained or unlabeled predictions, not counted in coverage.
  std::size_t skipped = 0;
  // Share of labeled, non-abstaining predictions with a real probability.
  double coverage = 0.0;
};

CalibrationSelection calibration_inputs(std::span<const Prediction> predictions,
                                        const SocialDataset& gold,
                                        Modality modality, ConfidenceMode mode);

// JSON object keyed by modality; each entry lists bins, ece (null when no
// probabilities are available), n and coverage.
void write_calibration_json(std::span<const Prediction> predictions,
                            const SocialDataset& gold, ConfidenceMode mode,
                            std::size_t bins, std::ostream& out);

// First run of digits in the text, accepted when it lies in [1, 4].
std::optional<int> parse_likert(std::string_view text);

struct JudgeSettings {
  std::string backend;
  double temperature = kDefaultTemperature;
  int max_tokens = kLabelMaxTokens;
};

// Throws kInvalidArgument for an empty text and kJudgeFailed when the answer
// has no score in 1..4.
int judge_similarity(std::string_view original, std::string_view rewritten,
                     LlmGateway& gateway, const JudgeSettings& settings);

struct SimilaritySummary {
  double mean = 0.0;
  // Population standard deviation.
  double stdev = 0.0;
  std::size_t n = 0;
  std::size_t failures = 0;
};

SimilaritySummary summarize_similarity(std::span<const int> scores,
                                       std::size_t failures);

// Judges every non-noop text rewrite in the log. Per-pair failures are
// counted; replay misses and configuration errors propagate.
SimilaritySummary judge_edit_log(const EditLog& log, LlmGateway& gateway,
                                 const JudgeSettings& settings,
                                 std::size_t workers = 1);

void write_similarity_json(const SimilaritySummary& summary, std::ostream& out);

struct Histogram {
  std::vector<std::string> bins;
  std::vector<std::size_t> counts;

  std::size_t total() const;
};

struct NeighborGroupStats {
  std::size_t accounts = 0;
  std::size_t verified = 0;
  Histogram follower_count;
  Histogram following_count;
  Histogram tweet_count;
  Histogram active_years;

  double verified_rate() const;
};

struct NeighborStats {
  NeighborGroupStats added;
  NeighborGroupStats removed;
};

// Count features use decade bins 0, 1-9, 10-99, ..., 100000-999999, 1000000+;
// active years use one bin per year 0..19 and 20+. Every AddFollow dst and
// RemoveFollow dst is counted once per edit. Throws kNotFound for users the
// dataset lacks.
NeighborStats neighbor_stats(const EditLog& log, const SocialDataset& dataset);

void write_neighbor_stats_tsv(const NeighborStats& stats, std::ostream& out);

struct SweepRow {
  Modality modality = Modality::kMetadata;
  std::size_t n = 0;
  ModalityScore score;
  std::optional<ClassificationMetrics> metrics;
  std::string error;
};

// One detection run per (n, modality); n = 0 omits the examples. ns must be
// even. A run that fails keeps its row with the error text. The ensemble row
// at each n combines the five detector runs of that n.
std::vector<SweepRow> sweep_icl(const DetectorEnvironment& env,
                                std::span<const std::string> targets,
                                std::span<const Modality> modalities,
                                std::span<const std::size_t> ns,
                                LlmGateway& gateway,
                                const DetectorSettings& settings,
                                std::size_t workers = 1);

void write_sweep_tsv(std::span<const SweepRow> rows, std::ostream& out);

}  // namespace botarms

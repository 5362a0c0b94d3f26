#include "botarms/evaluate.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"
#include "botarms/parallel.h"
#include "botarms/prompts.h"

namespace botarms {

using json = nlohmann::json;

void ConfusionCounts::add(Label predicted, Label gold) {
  if (predicted == Label::kBot) {
    (gold == Label::kBot ? tp : fp) += 1;
  } else {
    (gold == Label::kBot ? fn : tn) += 1;
  }
}

ClassificationMetrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) {
    throw Error(ErrorCode::kInsufficientData, "no scored predictions");
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

std::vector<ModalityScore> score_predictions(
    std::span<const Prediction> predictions, const SocialDataset& gold) {
  std::vector<ModalityScore> rows;
  auto row_for = [&](Modality m) -> ModalityScore& {
    for (auto& r : rows) {
      if (r.modality == m) return r;
    }
    rows.push_back({m, {}, 0, 0});
    return rows.back();
  };
  for (const auto& p : predictions) {
    ModalityScore& row = row_for(p.modality);
    const std::optional<Label> truth =
        gold.contains(p.user_id) ? gold.user(p.user_id).label : std::nullopt;
    if (!truth) {
      ++row.unlabeled;
    } else if (!p.label) {
      ++row.abstentions;
    } else {
      row.counts.add(*p.label, *truth);
    }
  }
  return rows;
}

namespace {

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

void write_metrics_tsv(std::span<const ModalityScore> scores,
                       std::ostream& out) {
  out << "# positive_class=bot; ensemble confidence is the vote fraction\n";
  out << "modality\tscored\tabstained\tunlabeled\ttp\tfp\ttn\tfn\taccuracy\tf1"
         "\tprecision\trecall\tflags\n";
  for (const auto& s : scores) {
    const auto& c = s.counts;
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}", to_string(s.modality),
                       c.total(), s.abstentions, s.unlabeled, c.tp, c.fp, c.tn,
                       c.fn);
    if (c.total() == 0) {
      out << "\tNA\tNA\tNA\tNA\tno_scored_predictions\n";
      continue;
    }
    const ClassificationMetrics m = metrics(c);
    std::string flags;
    if (m.precision_degenerate) flags += "precision_zero_denominator";
    if (m.recall_degenerate) {
      if (!flags.empty()) flags += ',';
      flags += "recall_zero_denominator";
    }
    out << fmt::format("\t{}\t{}\t{}\t{}\t{}\n", fixed(m.accuracy), fixed(m.f1),
                       fixed(m.precision), fixed(m.recall),
                       flags.empty() ? "-" : flags);
  }
}

CalibrationReport ece(std::span<const CalibrationInput> inputs,
                      std::size_t bins) {
  if (inputs.empty()) {
    throw Error(ErrorCode::kInsufficientData, "calibration needs predictions");
  }
  if (bins == 0) {
    throw Error(ErrorCode::kInvalidArgument, "calibration needs bins > 0");
  }
  const double width = static_cast<double>(bins);
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<std::size_t> correct(bins, 0);
  CalibrationReport report;
  report.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    report.bins[b].lower = static_cast<double>(b) / width;
    report.bins[b].upper = static_cast<double>(b + 1) / width;
  }
  for (const auto& in : inputs) {
    if (!(in.confidence >= 0.0 && in.confidence <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("confidence {} outside [0,1]", in.confidence));
    }
    auto b = static_cast<std::size_t>(std::floor(in.confidence * width));
    // Align with the exact edges b/bins despite rounding in the product.
    if (b > 0 && in.confidence < report.bins[std::min(b, bins - 1)].lower) --b;
    if (b + 1 < bins && in.confidence >= report.bins[b].upper) ++b;
    b = std::min(b, bins - 1);
    report.bins[b].count += 1;
    conf_sum[b] += in.confidence;
    correct[b] += in.correct ? 1 : 0;
  }
  report.n = inputs.size();
  for (std::size_t b = 0; b < bins; ++b) {
    CalibrationBin& bin = report.bins[b];
    if (bin.count == 0) continue;
    const double count = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / count;
    bin.accuracy = static_cast<double>(correct[b]) / count;
    report.ece += count / static_cast<double>(report.n) *
                  std::abs(bin.accuracy - bin.mean_confidence);
  }
  return report;
}

std::string_view to_string(ConfidenceMode mode) {
  return mode == ConfidenceMode::kPredictedLabel ? "predicted_label"
                                                 : "bot_likelihood";
}

std::optional<ConfidenceMode> confidence_mode_from_string(std::string_view name) {
  if (name == "predicted_label") return ConfidenceMode::kPredictedLabel;
  if (name == "bot_likelihood") return ConfidenceMode::kBotLikelihood;
  return std::nullopt;
}

CalibrationSelection calibration_inputs(std::span<const Prediction> predictions,
                                        const SocialDataset& gold,
                                        Modality modality,
                                        ConfidenceMode mode) {
  CalibrationSelection sel;
  std::size_t eligible = 0;
  for (const auto& p : predictions) {
    if (p.modality != modality) continue;
    const std::optional<Label> truth =
        gold.contains(p.user_id) ? gold.user(p.user_id).label : std::nullopt;
    if (!truth || !p.label) {
      ++sel.skipped;
      continue;
    }
    ++eligible;
    if (p.degenerate) {
      ++sel.degenerate;
      continue;
    }
    if (mode == ConfidenceMode::kPredictedLabel) {
      sel.inputs.push_back({p.confidence, *p.label == *truth});
    } else {
      const double bot_p =
          *p.label == Label::kBot ? p.confidence : 1.0 - p.confidence;
      sel.inputs.push_back({bot_p, *truth == Label::kBot});
    }
  }
  sel.coverage = eligible == 0 ? 0.0
                               : static_cast<double>(sel.inputs.size()) /
                                     static_cast<double>(eligible);
  return sel;
}

void write_calibration_json(std::span<const Prediction> predictions,
                            const SocialDataset& gold, ConfidenceMode mode,
                            std::size_t bins, std::ostream& out) {
  std::vector<Modality> order;
  for (const auto& p : predictions) {
    if (std::find(order.begin(), order.end(), p.modality) == order.end()) {
      order.push_back(p.modality);
    }
  }
  json report = json::object();
  report["positive_class"] = "bot";
  report["confidence_mode"] = to_string(mode);
  json per = json::object();
  for (Modality m : order) {
    const CalibrationSelection sel =
        calibration_inputs(predictions, gold, m, mode);
    json entry{{"n", sel.inputs.size()},
               {"degenerate_excluded", sel.degenerate},
               {"skipped", sel.skipped},
               {"coverage", sel.coverage}};
    if (sel.inputs.empty()) {
      entry["ece"] = nullptr;
      entry["bins"] = json::array();
    } else {
      const CalibrationReport r = ece(sel.inputs, bins);
      entry["ece"] = r.ece;
      json list = json::array();
      for (const auto& b : r.bins) {
        list.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"count", b.count},
                        {"mean_confidence", b.mean_confidence},
                        {"accuracy", b.accuracy}});
      }
      entry["bins"] = std::move(list);
    }
    per[std::string(to_string(m))] = std::move(entry);
  }
  report["modalities"] = std::move(per);
  out << report.dump(2) << '\n';
}

std::optional<int> parse_likert(std::string_view text) {
  const auto begin = std::find_if(text.begin(), text.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
  if (begin == text.end()) return std::nullopt;
  const auto end = std::find_if(begin, text.end(),
                                [](char c) { return c < '0' || c > '9'; });
  std::string_view digits(&*begin, static_cast<std::size_t>(end - begin));
  if (digits.size() != 1 || digits[0] < '1' || digits[0] > '4') {
    return std::nullopt;
  }
  return digits[0] - '0';
}

int judge_similarity(std::string_view original, std::string_view rewritten,
                     LlmGateway& gateway, const JudgeSettings& settings) {
  if (original.empty() || rewritten.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "similarity judging needs two non-empty texts");
  }
  CompletionRequest request;
  request.prompt = similarity_judge_prompt(original, rewritten).text();
  request.temperature = settings.temperature;
  request.max_tokens = settings.max_tokens;
  request.backend = settings.backend;
  const Completion reply = gateway.complete(request);
  if (auto score = parse_likert(reply.text)) return *score;
  throw Error(ErrorCode::kJudgeFailed,
              fmt::format("no 1-4 score in judge answer \"{}\"",
                          reply.text.substr(0, 80)));
}

SimilaritySummary summarize_similarity(std::span<const int> scores,
                                       std::size_t failures) {
  SimilaritySummary s;
  s.n = scores.size();
  s.failures = failures;
  if (scores.empty()) return s;
  double sum = 0.0;
  for (int v : scores) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (int v : scores) sq += (v - s.mean) * (v - s.mean);
  s.stdev = std::sqrt(sq / static_cast<double>(s.n));
  return s;
}

SimilaritySummary judge_edit_log(const EditLog& log, LlmGateway& gateway,
                                 const JudgeSettings& settings,
                                 std::size_t workers) {
  std::vector<const TextRewrite*> pairs;
  for (const auto& edit : log.edits) {
    if (const auto* r = std::get_if<TextRewrite>(&edit.change)) {
      if (!r->is_noop()) pairs.push_back(r);
    }
  }
  std::vector<std::optional<int>> results(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    try {
      results[i] = judge_similarity(pairs[i]->old_text, pairs[i]->new_text,
                                    gateway, settings);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::kJudgeFailed:
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kTransport:
          break;
        default:
          throw;
      }
    }
  });
  std::vector<int> scores;
  std::size_t failures = 0;
  for (const auto& r : results) {
    if (r) {
      scores.push_back(*r);
    } else {
      ++failures;
    }
  }
  return summarize_similarity(scores, failures);
}

void write_similarity_json(const SimilaritySummary& s, std::ostream& out) {
  out << json{{"mean", s.mean},
              {"stdev", s.stdev},
              {"n", s.n},
              {"failures", s.failures}}
             .dump(2)
      << '\n';
}

std::size_t Histogram::total() const {
  std::size_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

double NeighborGroupStats::verified_rate() const {
  return accounts == 0
             ? 0.0
             : static_cast<double>(verified) / static_cast<double>(accounts);
}

namespace {

constexpr std::size_t kDecadeBins = 8;
constexpr std::int64_t kYearBins = 20;

Histogram decade_histogram() {
  Histogram h;
  h.bins.push_back("0");
  std::int64_t lo = 1;
  for (std::size_t i = 1; i + 1 < kDecadeBins; ++i, lo *= 10) {
    h.bins.push_back(fmt::format("{}-{}", lo, lo * 10 - 1));
  }
  h.bins.push_back(fmt::format("{}+", lo));
  h.counts.assign(h.bins.size(), 0);
  return h;
}

Histogram year_histogram() {
  Histogram h;
  for (std::int64_t y = 0; y < kYearBins; ++y) h.bins.push_back(fmt::format("{}", y));
  h.bins.push_back(fmt::format("{}+", kYearBins));
  h.counts.assign(h.bins.size(), 0);
  return h;
}

std::size_t decade_bin(std::int64_t value) {
  std::size_t b = 0;
  for (std::int64_t edge = 1; value >= edge && b + 1 < kDecadeBins; edge *= 10) {
    ++b;
  }
  return b;
}

NeighborGroupStats empty_group() {
  NeighborGroupStats g;
  g.follower_count = decade_histogram();
  g.following_count = decade_histogram();
  g.tweet_count = decade_histogram();
  g.active_years = year_histogram();
  return g;
}

void count_user(NeighborGroupStats& g, const UserRecord& u) {
  ++g.accounts;
  if (u.verified) ++g.verified;
  g.follower_count.counts[decade_bin(u.follower_count)] += 1;
  g.following_count.counts[decade_bin(u.following_count)] += 1;
  g.tweet_count.counts[decade_bin(u.tweet_count)] += 1;
  g.active_years.counts[static_cast<std::size_t>(
      std::min(u.active_years, kYearBins))] += 1;
}

}  // namespace

NeighborStats neighbor_stats(const EditLog& log, const SocialDataset& dataset) {
  NeighborStats stats{empty_group(), empty_group()};
  for (const auto& edit : log.edits) {
    if (const auto* add = std::get_if<AddFollow>(&edit.change)) {
      count_user(stats.added, dataset.user(add->dst));
    } else if (const auto* rm = std::get_if<RemoveFollow>(&edit.change)) {
      count_user(stats.removed, dataset.user(rm->dst));
    }
  }
  return stats;
}

void write_neighbor_stats_tsv(const NeighborStats& stats, std::ostream& out) {
  out << fmt::format("# added accounts={} verified_rate={}\n",
                     stats.added.accounts, fixed(stats.added.verified_rate()));
  out << fmt::format("# removed accounts={} verified_rate={}\n",
                     stats.removed.accounts,
                     fixed(stats.removed.verified_rate()));
  out << "group\tfeature\tbin\tcount\n";
  auto group = [&](std::string_view name, const NeighborGroupStats& g) {
    auto hist = [&](std::string_view feature, const Histogram& h) {
      for (std::size_t i = 0; i < h.bins.size(); ++i) {
        out << fmt::format("{}\t{}\t{}\t{}\n", name, feature, h.bins[i],
                           h.counts[i]);
      }
    };
    hist("follower_count", g.follower_count);
    hist("following_count", g.following_count);
    hist("tweet_count", g.tweet_count);
    hist("active_years", g.active_years);
    out << fmt::format("{}\tverified\ttrue\t{}\n", name, g.verified);
    out << fmt::format("{}\tverified\tfalse\t{}\n", name,
                       g.accounts - g.verified);
  };
  group("added", stats.added);
  group("removed", stats.removed);
}

std::vector<SweepRow> sweep_icl(const DetectorEnvironment& env,
                                std::span<const std::string> targets,
                                std::span<const Modality> modalities,
                                std::span<const std::size_t> ns,
                                LlmGateway& gateway,
                                const DetectorSettings& settings,
                                std::size_t workers) {
  for (std::size_t n : ns) {
    if (n % 2 != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("sweep count {} is odd; balanced sampling needs "
                              "even counts",
                              n));
    }
  }
  const bool want_ensemble =
      std::find(modalities.begin(), modalities.end(), Modality::kEnsemble) !=
      modalities.end();
  std::vector<SweepRow> rows;
  for (std::size_t n : ns) {
    DetectorSettings local = settings;
    local.icl_count = n;
    local.retrieval_count = n;
    std::map<Modality, DetectionRun> runs;
    std::map<Modality, std::string> errors;
    auto run = [&](Modality m) {
      if (runs.count(m) || errors.count(m)) return;
      const Modality one[] = {m};
      try {
        runs[m] = detect_users(targets, one, env, gateway, local, workers);
      } catch (const Error& e) {
        errors[m] = e.what();
      }
    };
    for (Modality m : modalities) {
      if (m != Modality::kEnsemble) run(m);
    }
    if (want_ensemble) {
      for (Modality m : kDetectorModalities) run(m);
    }
    for (Modality m : modalities) {
      SweepRow row;
      row.modality = m;
      row.n = n;
      row.score.modality = m;
      std::vector<Prediction> predictions;
      if (m == Modality::kEnsemble) {
        for (Modality d : kDetectorModalities) {
          if (errors.count(d) && row.error.empty()) {
            row.error = fmt::format("{} run failed: {}", to_string(d), errors[d]);
          }
        }
        if (row.error.empty()) {
          for (std::size_t t = 0; t < targets.size(); ++t) {
            std::vector<Prediction> voters;
            for (Modality d : kDetectorModalities) {
              voters.push_back(runs[d].predictions[t]);
            }
            predictions.push_back(ensemble(voters));
          }
        }
      } else if (errors.count(m)) {
        row.error = errors[m];
      } else {
        predictions = runs[m].predictions;
      }
      if (row.error.empty()) {
        const auto scores = score_predictions(predictions, env.dataset());
        if (!scores.empty()) row.score = scores.front();
        if (row.score.counts.total() > 0) {
          row.metrics = metrics(row.score.counts);
        } else {
          row.error = "no scored predictions";
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep_tsv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "# positive_class=bot\n";
  out << "modality\tn\tscored\tabstained\taccuracy\tf1\tprecision\trecall"
         "\terror\n";
  for (const auto& r : rows) {
    out << fmt::format("{}\t{}\t{}\t{}", to_string(r.modality), r.n,
                       r.score.counts.total(), r.score.abstentions);
    if (r.metrics) {
      out << fmt::format("\t{}\t{}\t{}\t{}", fixed(r.metrics->accuracy),
                         fixed(r.metrics->f1), fixed(r.metrics->precision),
                         fixed(r.metrics->recall));
    } else {
      out << "\tNA\tNA\tNA\tNA";
    }
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '\t', ' ');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << '\t' << (error.empty() ? "-" : error) << '\n';
  }
}

}  // namespace botarms

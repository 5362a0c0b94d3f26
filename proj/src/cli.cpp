#include "botarms/cli.h"

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "botarms/dataset.h"
#include "botarms/detectors.h"
#include "botarms/error.h"
#include "botarms/evaluate.h"
#include "botarms/io_util.h"
#include "botarms/manipulate.h"
#include "botarms/run_config.h"
#include "botarms/synthetic.h"
#include "botarms/tuning_export.h"

namespace botarms {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every command that talks to backends.
struct CommonFlags {
  std::string config;
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> cache;
  std::optional<std::size_t> icl;
  std::optional<std::size_t> retrieval;
  std::optional<double> temperature;
  std::optional<std::size_t> workers;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "Run config JSON");
    cmd.add_option("--dataset", dataset, "Dataset JSONL (overrides config)");
    cmd.add_option("--seed", seed, "Root seed (overrides config)");
    cmd.add_option("--mode", mode, "live, record or replay");
    cmd.add_option("--cache", cache, "Completion cache JSONL");
    cmd.add_option("--icl", icl, "In-context examples per prompt");
    cmd.add_option("--retrieval", retrieval, "Retrieved descriptions per prompt");
    cmd.add_option("--temperature", temperature, "Sampling temperature");
    cmd.add_option("--workers", workers, "Worker threads");
  }

  RunConfig resolve() const {
    RunConfig rc = config.empty() ? RunConfig{} : load_run_config(config);
    if (dataset) rc.dataset = *dataset;
    if (seed) rc.seed = *seed;
    if (mode) {
      auto m = cache_mode_from_string(*mode);
      if (!m) throw UsageError(fmt::format("unknown mode \"{}\"", *mode));
      rc.mode = *m;
    }
    if (cache) rc.cache = *cache;
    if (icl) rc.icl_count = *icl;
    if (retrieval) rc.retrieval_count = *retrieval;
    if (temperature) rc.temperature = *temperature;
    if (workers) rc.workers = *workers;
    return rc;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Modality> parse_modalities(const std::string& text) {
  if (text == "all") {
    std::vector<Modality> all(kDetectorModalities.begin(),
                              kDetectorModalities.end());
    all.push_back(Modality::kEnsemble);
    return all;
  }
  std::vector<Modality> out;
  for (const auto& name : split_list(text)) {
    auto m = modality_from_string(name);
    if (!m) throw UsageError(fmt::format("unknown modality \"{}\"", name));
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw UsageError("no modalities given");
  return out;
}

// Detection runs the five voters whenever the ensemble is requested.
std::vector<Modality> detection_set(const std::vector<Modality>& requested) {
  std::vector<Modality> out;
  for (Modality m : requested) {
    if (m != Modality::kEnsemble) out.push_back(m);
  }
  if (std::find(requested.begin(), requested.end(), Modality::kEnsemble) !=
      requested.end()) {
    for (Modality m : kDetectorModalities) {
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
  }
  return out;
}

SocialDataset load_configured_dataset(const RunConfig& rc) {
  if (!rc.dataset) throw UsageError("a dataset is required (--dataset)");
  return load_dataset(*rc.dataset);
}

std::vector<std::string> split_targets(const SocialDataset& dataset,
                                       const std::string& split) {
  std::vector<std::string> ids;
  for (const auto& [id, user] : dataset.users()) {
    const Split s = dataset.split_of(id);
    if (split == "all" || (split == "train" && s == Split::kTrain) ||
        (split == "test" && s == Split::kTest)) {
      ids.push_back(id);
    }
  }
  if (split != "all" && split != "train" && split != "test") {
    throw UsageError(fmt::format("unknown split \"{}\"", split));
  }
  return ids;
}

std::vector<std::string> attack_targets(const SocialDataset& dataset,
                                        const std::string& spec) {
  if (spec == "test-bots" || spec == "train-bots" || spec == "all-bots") {
    const std::string split = spec.substr(0, spec.find('-'));
    std::vector<std::string> ids;
    for (const auto& id : split_targets(dataset, split)) {
      if (dataset.user(id).label == Label::kBot) ids.push_back(id);
    }
    return ids;
  }
  if (spec == "none") return {};
  return split_list(spec);
}

template <typename Writer>
std::string render(Writer&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

int cmd_synth(const SyntheticConfig& config, std::uint64_t seed,
              const std::string& out_path, std::ostream& err) {
  const SocialDataset dataset = generate_synthetic(config, seed);
  write_file_atomic(out_path, serialize_dataset(dataset));
  err << fmt::format("synth: {} users, {} edges -> {}\n", dataset.size(),
                     dataset.edges().size(), out_path);
  return kExitOk;
}

struct DetectFlags {
  std::string modalities = "all";
  std::string split = "test";
  std::string out;
  std::string metrics;
};

int cmd_detect(const CommonFlags& common, const DetectFlags& flags,
               std::ostream& out, std::ostream& err) {
  const RunConfig rc = common.resolve();
  const auto requested = parse_modalities(flags.modalities);
  const DetectorSettings settings = detector_settings(rc);
  const SocialDataset dataset = load_configured_dataset(rc);
  Services services = build_services(rc, false);
  const DetectorEnvironment env(dataset, services.embedder.get());
  const auto targets = split_targets(dataset, flags.split);
  const auto modalities = detection_set(requested);
  const DetectionRun run = detect_users(targets, modalities, env,
                                        *services.gateway, settings,
                                        effective_workers(rc));
  std::vector<Prediction> kept;
  for (const auto& p : run.predictions) {
    if (std::find(requested.begin(), requested.end(), p.modality) !=
        requested.end()) {
      kept.push_back(p);
    }
  }
  write_file_atomic(flags.out, render([&](std::ostream& os) {
                      write_predictions(kept, os);
                    }));
  const std::string report = render([&](std::ostream& os) {
    const auto scores = score_predictions(kept, dataset);
    write_metrics_tsv(scores, os);
  });
  if (flags.metrics.empty()) {
    out << report;
  } else {
    write_file_atomic(flags.metrics, report);
  }
  err << fmt::format("detect: {} users, {} predictions, {} failures\n",
                     targets.size(), kept.size(), run.failures.size());
  for (std::size_t i = 0; i < run.failures.size() && i < 10; ++i) {
    const auto& f = run.failures[i];
    err << fmt::format("  {} {}: {}\n", f.user_id, to_string(f.modality),
                       f.message);
  }
  return kExitOk;
}

struct AttackFlags {
  std::string strategy;
  std::string targets = "test-bots";
  std::string out_log;
  std::string out_dataset;
};

int cmd_attack(const CommonFlags& common, const AttackFlags& flags,
               std::optional<int> iterations,
               std::optional<std::string> selection, std::ostream& err) {
  auto strategy = strategy_from_string(flags.strategy);
  if (!strategy) {
    throw UsageError(fmt::format("unknown strategy \"{}\"", flags.strategy));
  }
  RunConfig rc = common.resolve();
  if (iterations) rc.iterations = *iterations;
  if (selection) {
    if (*selection == "min") {
      rc.selection = GuidanceSelection::kMinScore;
    } else if (*selection == "last") {
      rc.selection = GuidanceSelection::kLast;
    } else {
      throw UsageError(fmt::format("unknown selection \"{}\"", *selection));
    }
  }
  const AttackSettings settings = attack_settings(rc);
  const SocialDataset dataset = load_configured_dataset(rc);
  const bool scorer = *strategy == Strategy::kClassifierGuide ||
                      *strategy == Strategy::kSelectiveCombine ||
                      *strategy == Strategy::kBothCombine;
  Services services = build_services(rc, scorer);
  const auto targets = attack_targets(dataset, flags.targets);
  const AttackResult result =
      run_strategy(*strategy, dataset, targets, *services.gateway,
                   services.scorer.get(), settings, effective_workers(rc));
  write_file_atomic(flags.out_log, render([&](std::ostream& os) {
                      write_edit_log(result.log, os);
                    }));
  write_file_atomic(flags.out_dataset, serialize_dataset(result.dataset));
  err << fmt::format("attack {}: {} targets, {} edits, {} failures\n",
                     to_string(*strategy), targets.size(), result.log.size(),
                     result.failures.size());
  for (std::size_t i = 0; i < result.failures.size() && i < 10; ++i) {
    const auto& f = result.failures[i];
    err << fmt::format("  {} {}: {}\n", f.user_id, f.stage, f.message);
  }
  return kExitOk;
}

struct EvalFlags {
  std::string predictions;
  std::string metrics;
  std::string calibration;
  std::string calibration_mode = "predicted_label";
  std::size_t bins = 10;
  std::string edit_log;
  std::string neighbor_stats;
  std::string similarity;
};

int cmd_eval(const CommonFlags& common, const EvalFlags& flags,
             std::ostream& out, std::ostream& err) {
  const RunConfig rc = common.resolve();
  const SocialDataset dataset = load_configured_dataset(rc);
  bool did = false;
  if (!flags.predictions.empty()) {
    const auto predictions = load_predictions(flags.predictions);
    const std::string report = render([&](std::ostream& os) {
      write_metrics_tsv(score_predictions(predictions, dataset), os);
    });
    if (flags.metrics.empty()) {
      out << report;
    } else {
      write_file_atomic(flags.metrics, report);
    }
    if (!flags.calibration.empty()) {
      auto mode = confidence_mode_from_string(flags.calibration_mode);
      if (!mode) {
        throw UsageError(fmt::format("unknown calibration mode \"{}\"",
                                     flags.calibration_mode));
      }
      write_file_atomic(flags.calibration, render([&](std::ostream& os) {
                          write_calibration_json(predictions, dataset, *mode,
                                                 flags.bins, os);
                        }));
    }
    did = true;
  } else if (!flags.calibration.empty() || !flags.metrics.empty()) {
    throw UsageError("--metrics and --calibration need --predictions");
  }
  if (!flags.edit_log.empty()) {
    const EditLog log = load_edit_log(flags.edit_log);
    if (!flags.neighbor_stats.empty()) {
      write_file_atomic(flags.neighbor_stats, render([&](std::ostream& os) {
                          write_neighbor_stats_tsv(neighbor_stats(log, dataset),
                                                   os);
                        }));
    }
    if (!flags.similarity.empty()) {
      Services services = build_services(rc, false);
      const SimilaritySummary summary = judge_edit_log(
          log, *services.gateway, judge_settings(rc), effective_workers(rc));
      write_file_atomic(flags.similarity, render([&](std::ostream& os) {
                          write_similarity_json(summary, os);
                        }));
      err << fmt::format("eval: judged {} rewrites, {} failures\n", summary.n,
                         summary.failures);
    }
    did = true;
  } else if (!flags.neighbor_stats.empty() || !flags.similarity.empty()) {
    throw UsageError("--neighbor-stats and --similarity need --edit-log");
  }
  if (!did) throw UsageError("eval needs --predictions or --edit-log");
  return kExitOk;
}

struct SweepFlags {
  std::string modalities = "all";
  std::string ns = "0,2,4,8,16";
  std::string split = "test";
  std::string out;
};

int cmd_sweep(const CommonFlags& common, const SweepFlags& flags,
              std::ostream& out, std::ostream& err) {
  const RunConfig rc = common.resolve();
  const auto modalities = parse_modalities(flags.modalities);
  std::vector<std::size_t> ns;
  for (const auto& item : split_list(flags.ns)) {
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty()) {
      throw UsageError(fmt::format("bad example count \"{}\"", item));
    }
    if (value % 2 != 0) {
      throw UsageError(fmt::format("example count {} is odd", value));
    }
    ns.push_back(value);
  }
  if (ns.empty()) throw UsageError("no example counts given");
  const DetectorSettings settings = detector_settings(rc);
  const SocialDataset dataset = load_configured_dataset(rc);
  Services services = build_services(rc, false);
  const DetectorEnvironment env(dataset, services.embedder.get());
  const auto targets = split_targets(dataset, flags.split);
  const auto rows = sweep_icl(env, targets, modalities, ns, *services.gateway,
                              settings, effective_workers(rc));
  const std::string table = render([&](std::ostream& os) {
    write_sweep_tsv(rows, os);
  });
  if (flags.out.empty()) {
    out << table;
  } else {
    write_file_atomic(flags.out, table);
  }
  const auto failed = std::count_if(rows.begin(), rows.end(),
                                    [](const SweepRow& r) { return !r.error.empty(); });
  err << fmt::format("sweep: {} rows, {} failed\n", rows.size(), failed);
  return kExitOk;
}

struct ExportFlags {
  std::string modality;
  std::size_t count = kDefaultTuningCount;
  std::string out;
};

int cmd_export(const CommonFlags& common, const ExportFlags& flags,
               std::ostream& err) {
  auto modality = modality_from_string(flags.modality);
  if (!modality || *modality == Modality::kEnsemble) {
    throw UsageError(fmt::format("unknown detector modality \"{}\"",
                                 flags.modality));
  }
  const RunConfig rc = common.resolve();
  const std::uint64_t seed = require_seed(rc);
  const SocialDataset dataset = load_configured_dataset(rc);
  DetectorSettings settings;
  settings.icl_count = rc.icl_count;
  settings.retrieval_count = rc.retrieval_count;
  settings.text_posts = rc.text_posts;
  Services services = build_services(rc, false);
  const auto triples =
      export_tuning_triples(dataset, *modality, flags.count, seed,
                            services.embedder.get(), settings);
  write_file_atomic(flags.out, render([&](std::ostream& os) {
                      write_tuning_triples(triples, *modality, seed, os);
                    }));
  err << fmt::format("export: {} {} triples -> {}\n", triples.size(),
                     to_string(*modality), flags.out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Bot detection and evasion experiments over social graphs",
               "botarms"};
  app.require_subcommand(1);

  SyntheticConfig synth_config;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  bool no_signal = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--users", synth_config.users, "Number of users");
  synth->add_option("--bot-fraction", synth_config.bot_fraction,
                    "Share of bots, floor(users * fraction)")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--train-fraction", synth_config.train_fraction,
                    "Share of each class in the training split")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--posts", synth_config.posts_per_user, "Posts per user");
  synth->add_option("--follows", synth_config.follows_per_user,
                    "Accounts each user follows");
  synth->add_flag("--no-signal", no_signal, "Draw both classes alike");
  synth->add_option("--seed", synth_seed, "Seed")->required();
  synth->add_option("--out", synth_out, "Output dataset JSONL")->required();

  CommonFlags common;

  DetectFlags detect_flags;
  auto* detect = app.add_subcommand("detect", "Run modality detectors");
  common.attach(*detect);
  detect->add_option("--modalities", detect_flags.modalities,
                     "Comma list or \"all\"");
  detect->add_option("--split", detect_flags.split, "test, train or all");
  detect->add_option("--out", detect_flags.out, "Predictions JSONL")->required();
  detect->add_option("--metrics", detect_flags.metrics,
                     "Metrics TSV (stdout when omitted)");

  AttackFlags attack_flags;
  std::optional<int> iterations;
  std::optional<std::string> selection;
  auto* attack = app.add_subcommand("attack", "Manipulate bot accounts");
  common.attach(*attack);
  attack->add_option("--strategy", attack_flags.strategy, "Strategy name")
      ->required();
  attack->add_option("--targets", attack_flags.targets,
                     "test-bots, train-bots, all-bots, none or a comma list");
  attack->add_option("--iterations", iterations, "Guidance iterations");
  attack->add_option("--selection", selection, "Guided pick: min or last");
  attack->add_option("--out-log", attack_flags.out_log, "Edit log JSONL")
      ->required();
  attack->add_option("--out-dataset", attack_flags.out_dataset,
                     "Manipulated dataset JSONL")
      ->required();

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Score predictions and edit logs");
  common.attach(*eval);
  eval->add_option("--predictions", eval_flags.predictions, "Predictions JSONL");
  eval->add_option("--metrics", eval_flags.metrics, "Metrics TSV");
  eval->add_option("--calibration", eval_flags.calibration, "Calibration JSON");
  eval->add_option("--calibration-mode", eval_flags.calibration_mode,
                   "predicted_label or bot_likelihood");
  eval->add_option("--bins", eval_flags.bins, "Calibration bins")
      ->check(CLI::PositiveNumber);
  eval->add_option("--edit-log", eval_flags.edit_log, "Edit log JSONL");
  eval->add_option("--neighbor-stats", eval_flags.neighbor_stats,
                   "Added/removed neighbor histograms TSV");
  eval->add_option("--similarity", eval_flags.similarity,
                   "Rewrite similarity summary JSON");

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Accuracy across example counts");
  common.attach(*sweep);
  sweep->add_option("--modalities", sweep_flags.modalities,
                    "Comma list or \"all\"");
  sweep->add_option("--ns", sweep_flags.ns, "Comma list of even counts");
  sweep->add_option("--split", sweep_flags.split, "test, train or all");
  sweep->add_option("--out", sweep_flags.out, "Sweep TSV (stdout when omitted)");

  ExportFlags export_flags;
  auto* exp = app.add_subcommand("export", "Write instruction-tuning triples");
  common.attach(*exp);
  exp->add_option("--modality", export_flags.modality, "Detector modality")
      ->required();
  exp->add_option("--count", export_flags.count, "Triples to sample");
  exp->add_option("--out", export_flags.out, "Triples JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      synth_config.planted_signal = !no_signal;
      return cmd_synth(synth_config, synth_seed, synth_out, err);
    }
    if (detect->parsed()) return cmd_detect(common, detect_flags, out, err);
    if (attack->parsed()) {
      return cmd_attack(common, attack_flags, iterations, selection, err);
    }
    if (eval->parsed()) return cmd_eval(common, eval_flags, out, err);
    if (sweep->parsed()) return cmd_sweep(common, sweep_flags, out, err);
    if (exp->parsed()) return cmd_export(common, export_flags, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << fmt::format("error [{}]: {}\n", to_string(e.code()), e.what());
    return e.code() == ErrorCode::kConfig ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace botarms

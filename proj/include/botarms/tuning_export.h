#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "botarms/dataset.h"
#include "botarms/detectors.h"
#include "botarms/linearize.h"
#include "botarms/modality.h"

namespace botarms {

struct TuningTriple {
  std::string instruction;
  std::string input;
  std::string output;
  bool operator==(const TuningTriple&) const = default;
};

inline constexpr std::size_t kDefaultTuningCount = 1000;

// Seeded sample of `count` training users, each rendered with the modality's
// detector template: instruction = the template's instruction sentence,
// input = examples and target block, output = the gold label. Throws
// kInsufficientData when count exceeds the training split and kIntegrity on
// an unlabeled user. The text modality uses the user's representative text.
std::vector<TuningTriple> export_tuning_triples(
    const SocialDataset& dataset, Modality modality, std::size_t count,
    std::uint64_t seed, const Embedder* embedder,
    const DetectorSettings& settings);

// Header line {"format":"tuning_triples", "modality", "count", "seed"} then one
// {"instruction", "input", "output"} object per line.
void write_tuning_triples(std::span<const TuningTriple> triples,
                          Modality modality, std::uint64_t seed,
                          std::ostream& out);
std::vector<TuningTriple> read_tuning_triples(std::istream& in);

}  // namespace botarms

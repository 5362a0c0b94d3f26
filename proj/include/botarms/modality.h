#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace botarms {

enum class Modality {
  kMetadata,
  kText,
  kMetaText,
  kStructRandom,
  kStructAttention,
  kEnsemble,
};

// The five voting detectors, in ensemble order.
inline constexpr std::array<Modality, 5> kDetectorModalities = {
    Modality::kMetadata, Modality::kText, Modality::kMetaText,
    Modality::kStructRandom, Modality::kStructAttention};

// "metadata", "text", "meta_text", "struct_rand", "struct_att", "ensemble".
std::string_view to_string(Modality modality);
std::optional<Modality> modality_from_string(std::string_view name);

}  // namespace botarms

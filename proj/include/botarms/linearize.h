#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botarms/dataset.h"

namespace botarms {

// "Username: {u}  Follower count: {n} Following count: {n} Tweet count: {n}
// Verified: {True|False} Active years: {n} years" on one line. The double
// space after the username is part of the format.
std::string verbalize_metadata(const UserRecord& user);

// Metadata line, newline, "Description: {description}".
std::string render_user_block(const UserRecord& user);

// Metadata and description on a single line.
std::string render_user_line(const UserRecord& user);

// Text standing in for the user when scoring similarity: the description,
// else the first non-blank post, else the verbalized metadata.
std::string representative_text(const UserRecord& user);

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

// Throws kInvalidArgument on dimension mismatch and kDegenerateInput when
// either vector has zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Must be safe to call from several threads at once.
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Bag of words hashed into a fixed number of buckets; each token adds 1 to
// bucket fnv1a(token) % dim.
class HashedBagOfWordsEmbedder final : public Embedder {
 public:
  explicit HashedBagOfWordsEmbedder(std::size_t dim = 256);
  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dim() const { return dim_; }

  static std::size_t bucket(std::string_view token, std::size_t dim);

 private:
  std::size_t dim_;
};

enum class PermMode { kRandom, kAttention };

inline constexpr std::size_t kMaxRenderedNeighbors = 5;

struct OrderedNeighbor {
  const UserRecord* user = nullptr;
  std::optional<double> similarity;
};

struct NeighborOrdering {
  PermMode mode = PermMode::kRandom;
  std::uint64_t seed = 0;
  std::vector<OrderedNeighbor> entries;
};

// Random: seeded shuffle of the neighbors in ascending-id order. Attention:
// descending cosine similarity between the embedded representative texts of
// target and neighbor, ties by ascending id. Both modes keep at most `cap`
// entries after ordering. Attention mode requires an embedder.
NeighborOrdering permute_neighbors(const UserRecord& target,
                                   std::span<const UserRecord* const> neighbors,
                                   PermMode mode, std::uint64_t seed,
                                   const Embedder* embedder,
                                   std::size_t cap = kMaxRenderedNeighbors);

// Follower section, following section and target block of the structure
// detector prompts. A neighbor gets a "Label:" line only when the dataset
// exposes a training label for it.
std::string render_structure_block(const UserRecord& target,
                                   const NeighborOrdering& followers,
                                   const NeighborOrdering& followings,
                                   PermMode mode,
                                   const SocialDataset& dataset);

}  // namespace botarms

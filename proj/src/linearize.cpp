#include "botarms/linearize.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "botarms/error.h"
#include "botarms/retrieval.h"
#include "botarms/rng.h"

namespace botarms {

std::string verbalize_metadata(const UserRecord& user) {
  return fmt::format(
      "Username: {}  Follower count: {} Following count: {} Tweet count: {} "
      "Verified: {} Active years: {} years",
      user.username, user.follower_count, user.following_count,
      user.tweet_count, user.verified ? "True" : "False", user.active_years);
}

std::string render_user_block(const UserRecord& user) {
  return fmt::format("{}\nDescription: {}", verbalize_metadata(user),
                     user.description);
}

std::string render_user_line(const UserRecord& user) {
  return fmt::format("{} Description: {}", verbalize_metadata(user),
                     user.description);
}

namespace {
bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}
}  // namespace

std::string representative_text(const UserRecord& user) {
  if (!blank(user.description)) return user.description;
  for (const auto& post : user.posts) {
    if (!blank(post)) return post;
  }
  return verbalize_metadata(user);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("embedding dimension mismatch: {} vs {}", a.dim(),
                            b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kDegenerateInput,
                "cosine similarity of a zero-norm vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

HashedBagOfWordsEmbedder::HashedBagOfWordsEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dim must be positive");
  }
}

std::size_t HashedBagOfWordsEmbedder::bucket(std::string_view token,
                                             std::size_t dim) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return static_cast<std::size_t>(h % dim);
}

EmbeddingVector HashedBagOfWordsEmbedder::embed(std::string_view text) const {
  EmbeddingVector v;
  v.values.assign(dim_, 0.0);
  for (const auto& token : tokenize(text)) v.values[bucket(token, dim_)] += 1.0;
  return v;
}

NeighborOrdering permute_neighbors(const UserRecord& target,
                                   std::span<const UserRecord* const> neighbors,
                                   PermMode mode, std::uint64_t seed,
                                   const Embedder* embedder, std::size_t cap) {
  NeighborOrdering ordering;
  ordering.mode = mode;
  ordering.seed = seed;
  std::vector<const UserRecord*> canonical(neighbors.begin(), neighbors.end());
  std::sort(canonical.begin(), canonical.end(),
            [](const UserRecord* a, const UserRecord* b) {
              return a->user_id < b->user_id;
            });

  if (mode == PermMode::kRandom) {
    Rng rng(seed);
    rng.shuffle(std::span<const UserRecord*>(canonical));
    for (const UserRecord* user : canonical) {
      ordering.entries.push_back({user, std::nullopt});
    }
  } else {
    if (embedder == nullptr) {
      throw Error(ErrorCode::kInvalidArgument,
                  "attention ordering requires an embedder");
    }
    if (canonical.empty()) return ordering;
    const EmbeddingVector anchor = embedder->embed(representative_text(target));
    for (const UserRecord* user : canonical) {
      try {
        const EmbeddingVector v = embedder->embed(representative_text(*user));
        ordering.entries.push_back({user, cosine_similarity(anchor, v)});
      } catch (const Error& e) {
        throw Error(e.code(), fmt::format("neighbor {}: {}", user->user_id,
                                          e.what()));
      }
    }
    std::stable_sort(ordering.entries.begin(), ordering.entries.end(),
                     [](const OrderedNeighbor& a, const OrderedNeighbor& b) {
                       if (*a.similarity != *b.similarity) {
                         return *a.similarity > *b.similarity;
                       }
                       return a.user->user_id < b.user->user_id;
                     });
  }
  if (ordering.entries.size() > cap) ordering.entries.resize(cap);
  return ordering;
}

namespace {

std::string neighbor_section(std::string_view header,
                             const NeighborOrdering& ordering,
                             const SocialDataset& dataset) {
  std::string out(header);
  for (const auto& entry : ordering.entries) {
    out += "\n\n";
    out += render_user_block(*entry.user);
    if (auto label = dataset.known_label(entry.user->user_id)) {
      out += fmt::format("\nLabel: {}", to_string(*label));
    }
  }
  return out;
}

}  // namespace

std::string render_structure_block(const UserRecord& target,
                                   const NeighborOrdering& followers,
                                   const NeighborOrdering& followings,
                                   PermMode mode,
                                   const SocialDataset& dataset) {
  const bool attention = mode == PermMode::kAttention;
  std::string out = neighbor_section(
      attention ? "These users follow the target user, from most related to "
                  "least related:"
                : "These users follow the target user:",
      followers, dataset);
  out += "\n\n";
  out += neighbor_section(
      attention ? "The target user follows these users, from most related to "
                  "least related:"
                : "The target user follows these users:",
      followings, dataset);
  out += "\n\nTarget user:\n\n";
  out += render_user_block(target);
  out += "\nLabel:";
  return out;
}

}  // namespace botarms

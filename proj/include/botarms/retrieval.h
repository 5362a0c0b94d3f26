#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "botarms/dataset.h"

namespace botarms {

// Lowercases (ASCII and Latin-1) and splits on whitespace and punctuation,
// including the common Unicode space and punctuation blocks. Empty tokens are
// dropped.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct RetrievalHit {
  std::string doc_id;
  double score = 0.0;
};

// Okapi BM25 with Robertson–Spärck-Jones IDF, floored at zero. Each distinct
// query term contributes once. Immutable after construction.
class Bm25Index {
 public:
  struct Document {
    std::string id;
    std::string text;
  };

  // Documents are reordered by ascending id. Ids must be unique.
  explicit Bm25Index(std::vector<Document> documents, Bm25Params params = {});

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const Bm25Params& params() const { return params_; }
  double average_length() const { return avg_length_; }
  std::size_t document_frequency(std::string_view term) const;
  double idf(std::string_view term) const;

  const std::string& text(std::string_view doc_id) const;

  // Descending score, ties by ascending doc_id; min(n, eligible) hits. When
  // exclude_id is given that document never appears. Throws
  // kInsufficientData on an empty index.
  std::vector<RetrievalHit> top_n(
      std::string_view query, std::size_t n,
      std::optional<std::string_view> exclude_id = std::nullopt) const;

 private:
  struct Entry {
    std::string id;
    std::string text;
    std::unordered_map<std::string, std::size_t> term_counts;
    std::size_t length = 0;
  };

  std::vector<Entry> docs_;
  std::unordered_map<std::string, std::size_t> df_;
  Bm25Params params_;
  double avg_length_ = 0.0;
};

// Non-empty descriptions of training users, optionally restricted to one
// class. Document ids are user ids.
Bm25Index build_description_index(const SocialDataset& dataset,
                                  std::optional<Label> only = std::nullopt);

// Exactly n/2 bots and n/2 humans from the training split, drawn without
// replacement and returned in seeded shuffled order. n must be even.
// exclude_id (typically the prediction target) is never drawn.
std::vector<const UserRecord*> sample_balanced(
    const SocialDataset& dataset, std::size_t n, std::uint64_t seed,
    std::optional<std::string_view> exclude_id = std::nullopt);

}  // namespace botarms

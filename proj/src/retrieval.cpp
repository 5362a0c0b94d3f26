#include "botarms/retrieval.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "botarms/error.h"
#include "botarms/rng.h"

namespace botarms {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence starting at text[i]; advances i. Malformed input
// yields kInvalid and consumes one byte.
char32_t decode(std::string_view text, std::size_t& i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(text[k]);
  };
  const unsigned char lead = byte(i);
  std::size_t len = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++i;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > text.size()) {
    ++i;
    return kInvalid;
  }
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  i += len;
  return cp;
}

bool is_separator(char32_t cp) {
  if (cp == kInvalid) return true;
  if (cp < 0x80) {
    const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                       (cp >= 'A' && cp <= 'Z');
    return !alnum;
  }
  if (cp <= 0xBF) return true;  // C1 controls, NBSP, Latin-1 punctuation
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp == 0x1680 || cp == 0xFEFF) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // General Punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK Symbols and Punct.
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;  // Fullwidth ASCII punct.
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode(text, i);
    if (is_separator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      append_utf8(current, to_lower(cp));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index::Bm25Index(std::vector<Document> documents, Bm25Params params)
    : params_(params) {
  std::sort(documents.begin(), documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < documents.size(); ++i) {
    if (documents[i].id == documents[i - 1].id) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("duplicate document id {}", documents[i].id));
    }
  }
  std::size_t total = 0;
  for (auto& doc : documents) {
    Entry entry;
    entry.id = std::move(doc.id);
    entry.text = std::move(doc.text);
    auto tokens = tokenize(entry.text);
    entry.length = tokens.size();
    total += entry.length;
    for (auto& token : tokens) ++entry.term_counts[token];
    for (const auto& [term, count] : entry.term_counts) ++df_[term];
    docs_.push_back(std::move(entry));
  }
  if (!docs_.empty()) {
    avg_length_ = static_cast<double>(total) / static_cast<double>(docs_.size());
  }
}

std::size_t Bm25Index::document_frequency(std::string_view term) const {
  auto it = df_.find(std::string(term));
  return it == df_.end() ? 0 : it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(docs_.size());
  const double df = static_cast<double>(document_frequency(term));
  return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
}

const std::string& Bm25Index::text(std::string_view doc_id) const {
  auto it = std::lower_bound(
      docs_.begin(), docs_.end(), doc_id,
      [](const Entry& e, std::string_view id) { return e.id < id; });
  if (it == docs_.end() || it->id != doc_id) {
    throw Error(ErrorCode::kNotFound, fmt::format("unknown document {}", doc_id));
  }
  return it->text;
}

std::vector<RetrievalHit> Bm25Index::top_n(
    std::string_view query, std::size_t n,
    std::optional<std::string_view> exclude_id) const {
  if (docs_.empty()) {
    throw Error(ErrorCode::kInsufficientData, "BM25 index is empty");
  }
  if (n == 0) return {};

  std::vector<std::string> terms;
  {
    std::unordered_set<std::string> seen;
    for (auto& token : tokenize(query)) {
      if (seen.insert(token).second) terms.push_back(std::move(token));
    }
  }
  std::vector<double> weights;
  weights.reserve(terms.size());
  for (const auto& term : terms) weights.push_back(idf(term));

  std::vector<RetrievalHit> hits;
  hits.reserve(docs_.size());
  for (const auto& doc : docs_) {
    if (exclude_id && doc.id == *exclude_id) continue;
    const double norm =
        params_.k1 * (1.0 - params_.b +
                      params_.b * static_cast<double>(doc.length) /
                          (avg_length_ > 0.0 ? avg_length_ : 1.0));
    double score = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      auto it = doc.term_counts.find(terms[t]);
      if (it == doc.term_counts.end()) continue;
      const double tf = static_cast<double>(it->second);
      score += weights[t] * tf * (params_.k1 + 1.0) / (tf + norm);
    }
    hits.push_back({doc.id, score});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const RetrievalHit& a, const RetrievalHit& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.doc_id < b.doc_id;
                   });
  if (hits.size() > n) hits.resize(n);
  return hits;
}

Bm25Index build_description_index(const SocialDataset& dataset,
                                  std::optional<Label> only) {
  std::vector<Bm25Index::Document> docs;
  for (const UserRecord* user : dataset.users_in_split(Split::kTrain)) {
    if (user->description.empty()) continue;
    if (only && user->label != only) continue;
    docs.push_back({user->user_id, user->description});
  }
  return Bm25Index(std::move(docs));
}

std::vector<const UserRecord*> sample_balanced(
    const SocialDataset& dataset, std::size_t n, std::uint64_t seed,
    std::optional<std::string_view> exclude_id) {
  if (n % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("balanced sample size must be even, got {}", n));
  }
  std::vector<const UserRecord*> bots, humans;
  for (const UserRecord* user : dataset.users_in_split(Split::kTrain)) {
    if (exclude_id && user->user_id == *exclude_id) continue;
    (user->label == Label::kBot ? bots : humans).push_back(user);
  }
  const std::size_t half = n / 2;
  if (bots.size() < half) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("need {} training bots for a balanced sample, have {}",
                            half, bots.size()));
  }
  if (humans.size() < half) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("need {} training humans for a balanced sample, have {}",
                            half, humans.size()));
  }
  Rng rng(seed);
  // Partial Fisher–Yates: the first `half` slots become a uniform sample.
  auto draw = [&](std::vector<const UserRecord*>& pool) {
    for (std::size_t i = 0; i < half; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(half);
  };
  draw(bots);
  draw(humans);
  std::vector<const UserRecord*> out = bots;
  out.insert(out.end(), humans.begin(), humans.end());
  rng.shuffle(std::span<const UserRecord*>(out));
  return out;
}

}  // namespace botarms

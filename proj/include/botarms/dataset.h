#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "botarms/edit_log.h"

namespace botarms {

enum class Label { kHuman, kBot };
enum class Split { kTrain, kTest };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
std::optional<Label> label_from_string(std::string_view name);
std::optional<Split> split_from_string(std::string_view name);

struct UserRecord {
  std::string user_id;
  std::string username;
  std::int64_t follower_count = 0;
  std::int64_t following_count = 0;
  std::int64_t tweet_count = 0;
  bool verified = false;
  std::int64_t active_years = 0;
  std::string description;
  std::vector<std::string> posts;
  std::optional<Label> label;

  bool operator==(const UserRecord&) const = default;
};

// (src, dst): src follows dst.
using Edge = std::pair<std::string, std::string>;

// Users, follow edges and split assignments. Mutators enforce the structural
// invariants (unique ids, no self-loops, no dangling or duplicate edges), so a
// constructed dataset is always valid. Treat it as immutable once built;
// apply_edits returns a fresh copy.
class SocialDataset {
 public:
  using UserMap = std::map<std::string, UserRecord, std::less<>>;

  // Throws kIntegrity on duplicate id, negative counts, or a train-split user
  // without a label.
  void add_user(UserRecord user, Split split);

  // Returns false (and leaves the dataset unchanged) for a duplicate edge.
  // Throws kIntegrity for self-loops and unknown endpoints.
  bool add_edge(std::string_view src, std::string_view dst);

  // Throws kNotFound when the edge is absent.
  void remove_edge(std::string_view src, std::string_view dst);

  bool contains(std::string_view user_id) const;
  bool has_edge(std::string_view src, std::string_view dst) const;

  const UserRecord& user(std::string_view user_id) const;
  UserRecord& mutable_user(std::string_view user_id);
  Split split_of(std::string_view user_id) const;

  // Labels visible to detectors: training-split labels only.
  std::optional<Label> known_label(std::string_view user_id) const;

  const UserMap& users() const { return users_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t size() const { return users_.size(); }

  // Ascending user_id.
  std::vector<std::string> follower_ids(std::string_view user_id) const;
  std::vector<std::string> following_ids(std::string_view user_id) const;
  std::vector<const UserRecord*> users_in_split(Split split) const;

  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string provenance) {
    provenance_ = std::move(provenance);
  }

  // Re-checks every invariant from scratch; throws kIntegrity on violation.
  void validate() const;

  bool operator==(const SocialDataset& other) const {
    return users_ == other.users_ && splits_ == other.splits_ &&
           edges_ == other.edges_;
  }

 private:
  UserMap users_;
  std::map<std::string, Split, std::less<>> splits_;
  std::set<Edge> edges_;
  // (dst, src) mirror of edges_ for follower lookups.
  std::set<Edge> reverse_edges_;
  std::string provenance_;
};

struct Neighborhood {
  std::vector<const UserRecord*> followers;
  std::vector<const UserRecord*> followings;
};

// Both lists in ascending user_id order. Throws kNotFound for unknown users.
Neighborhood neighbor_sets(const SocialDataset& dataset,
                           std::string_view user_id);

struct LoadStats {
  std::size_t users = 0;
  std::size_t edges = 0;
  std::size_t duplicate_edges = 0;
};

SocialDataset parse_dataset(std::istream& in, LoadStats* stats = nullptr);
SocialDataset load_dataset(const std::filesystem::path& path,
                           LoadStats* stats = nullptr);

// Canonical JSON Lines form: users by ascending id, then edges in sorted
// order. Equal datasets serialize to identical bytes.
void write_dataset(const SocialDataset& dataset, std::ostream& out);
std::string serialize_dataset(const SocialDataset& dataset);

// Applies edits in order to a copy of the dataset. Throws kConflict for an
// AddFollow of an existing edge or a TextRewrite whose old text does not match,
// kNotFound for a RemoveFollow of an absent edge.
SocialDataset apply_edits(const SocialDataset& dataset, const EditLog& log);

}  // namespace botarms

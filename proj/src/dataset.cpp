#include "botarms/dataset.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"

namespace botarms {

using json = nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::kBot ? "bot" : "human";
}

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::optional<Label> label_from_string(std::string_view name) {
  if (name == "bot") return Label::kBot;
  if (name == "human") return Label::kHuman;
  return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

void SocialDataset::add_user(UserRecord user, Split split) {
  if (user.user_id.empty()) {
    throw Error(ErrorCode::kIntegrity, "user id must be non-empty");
  }
  if (users_.contains(user.user_id)) {
    throw Error(ErrorCode::kIntegrity,
                fmt::format("duplicate user id {}", user.user_id));
  }
  if (user.follower_count < 0 || user.following_count < 0 ||
      user.tweet_count < 0 || user.active_years < 0) {
    throw Error(ErrorCode::kIntegrity,
                fmt::format("negative count on user {}", user.user_id));
  }
  if (split == Split::kTrain && !user.label) {
    throw Error(ErrorCode::kIntegrity,
                fmt::format("training user {} has no label", user.user_id));
  }
  std::string id = user.user_id;
  splits_.emplace(id, split);
  users_.emplace(std::move(id), std::move(user));
}

bool SocialDataset::add_edge(std::string_view src, std::string_view dst) {
  if (src == dst) {
    throw Error(ErrorCode::kIntegrity, fmt::format("self-loop {}→{}", src, dst));
  }
  for (std::string_view id : {src, dst}) {
    if (!contains(id)) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("edge {}→{} references missing user {}", src,
                              dst, id));
    }
  }
  auto [it, inserted] = edges_.emplace(std::string(src), std::string(dst));
  if (inserted) reverse_edges_.emplace(std::string(dst), std::string(src));
  return inserted;
}

void SocialDataset::remove_edge(std::string_view src, std::string_view dst) {
  auto it = edges_.find(Edge(src, dst));
  if (it == edges_.end()) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("edge {}→{} does not exist", src, dst));
  }
  edges_.erase(it);
  reverse_edges_.erase(Edge(dst, src));
}

bool SocialDataset::contains(std::string_view user_id) const {
  return users_.find(user_id) != users_.end();
}

bool SocialDataset::has_edge(std::string_view src, std::string_view dst) const {
  return edges_.contains(Edge(src, dst));
}

const UserRecord& SocialDataset::user(std::string_view user_id) const {
  auto it = users_.find(user_id);
  if (it == users_.end()) {
    throw Error(ErrorCode::kNotFound, fmt::format("unknown user {}", user_id));
  }
  return it->second;
}

UserRecord& SocialDataset::mutable_user(std::string_view user_id) {
  auto it = users_.find(user_id);
  if (it == users_.end()) {
    throw Error(ErrorCode::kNotFound, fmt::format("unknown user {}", user_id));
  }
  return it->second;
}

Split SocialDataset::split_of(std::string_view user_id) const {
  auto it = splits_.find(user_id);
  if (it == splits_.end()) {
    throw Error(ErrorCode::kNotFound, fmt::format("unknown user {}", user_id));
  }
  return it->second;
}

std::optional<Label> SocialDataset::known_label(std::string_view user_id) const {
  if (split_of(user_id) != Split::kTrain) return std::nullopt;
  return user(user_id).label;
}

namespace {

std::vector<std::string> adjacent(const std::set<Edge>& edges,
                                  std::string_view user_id) {
  std::vector<std::string> out;
  for (auto it = edges.lower_bound(Edge(user_id, std::string()));
       it != edges.end() && it->first == user_id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

std::vector<std::string> SocialDataset::follower_ids(
    std::string_view user_id) const {
  return adjacent(reverse_edges_, user_id);
}

std::vector<std::string> SocialDataset::following_ids(
    std::string_view user_id) const {
  return adjacent(edges_, user_id);
}

std::vector<const UserRecord*> SocialDataset::users_in_split(
    Split split) const {
  std::vector<const UserRecord*> out;
  for (const auto& [id, record] : users_) {
    if (splits_.at(id) == split) out.push_back(&record);
  }
  return out;
}

void SocialDataset::validate() const {
  for (const auto& [id, record] : users_) {
    if (id != record.user_id) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("user key {} disagrees with record id {}", id,
                              record.user_id));
    }
    if (!splits_.contains(id)) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("user {} has no split", id));
    }
    if (record.follower_count < 0 || record.following_count < 0 ||
        record.tweet_count < 0 || record.active_years < 0) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("negative count on user {}", id));
    }
    if (splits_.at(id) == Split::kTrain && !record.label) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("training user {} has no label", id));
    }
  }
  if (splits_.size() != users_.size()) {
    throw Error(ErrorCode::kIntegrity, "split table out of sync with users");
  }
  if (edges_.size() != reverse_edges_.size()) {
    throw Error(ErrorCode::kIntegrity, "reverse edge index out of sync");
  }
  for (const auto& [src, dst] : edges_) {
    if (src == dst) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("self-loop {}→{}", src, dst));
    }
    if (!contains(src) || !contains(dst)) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("dangling edge {}→{}", src, dst));
    }
    if (!reverse_edges_.contains(Edge(dst, src))) {
      throw Error(ErrorCode::kIntegrity, "reverse edge index out of sync");
    }
  }
}

Neighborhood neighbor_sets(const SocialDataset& dataset,
                           std::string_view user_id) {
  if (!dataset.contains(user_id)) {
    throw Error(ErrorCode::kNotFound, fmt::format("unknown user {}", user_id));
  }
  Neighborhood out;
  for (const auto& id : dataset.follower_ids(user_id)) {
    out.followers.push_back(&dataset.user(id));
  }
  for (const auto& id : dataset.following_ids(user_id)) {
    out.followings.push_back(&dataset.user(id));
  }
  return out;
}

namespace {

std::int64_t read_count(const json& record, const char* field) {
  const json& v = record.at(field);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kParse, fmt::format("{} must be an integer", field));
  }
  std::int64_t n = v.get<std::int64_t>();
  if (n < 0) {
    throw Error(ErrorCode::kParse, fmt::format("{} must be >= 0", field));
  }
  return n;
}

UserRecord user_from_json(const json& record) {
  UserRecord user;
  user.user_id = record.at("id").get<std::string>();
  user.username = record.value("username", std::string());
  user.follower_count = read_count(record, "follower_count");
  user.following_count = read_count(record, "following_count");
  user.tweet_count = read_count(record, "tweet_count");
  user.verified = record.at("verified").get<bool>();
  user.active_years = read_count(record, "active_years");
  user.description = record.value("description", std::string());
  if (record.contains("posts")) {
    user.posts = record.at("posts").get<std::vector<std::string>>();
  }
  if (record.contains("label") && !record.at("label").is_null()) {
    auto name = record.at("label").get<std::string>();
    user.label = label_from_string(name);
    if (!user.label) {
      throw Error(ErrorCode::kParse, fmt::format("unknown label \"{}\"", name));
    }
  }
  return user;
}

json user_to_json(const UserRecord& user, Split split) {
  json j;
  j["type"] = "user";
  j["id"] = user.user_id;
  j["username"] = user.username;
  j["follower_count"] = user.follower_count;
  j["following_count"] = user.following_count;
  j["tweet_count"] = user.tweet_count;
  j["verified"] = user.verified;
  j["active_years"] = user.active_years;
  j["description"] = user.description;
  j["posts"] = user.posts;
  j["label"] = user.label ? json(to_string(*user.label)) : json(nullptr);
  j["split"] = to_string(split);
  return j;
}

}  // namespace

SocialDataset parse_dataset(std::istream& in, LoadStats* stats) {
  struct PendingEdge {
    std::string src, dst;
    std::size_t line;
  };
  SocialDataset dataset;
  std::vector<PendingEdge> pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json record = json::parse(line);
      const std::string type = record.at("type").get<std::string>();
      if (type == "user") {
        Split split = Split::kTest;
        if (record.contains("split") && !record.at("split").is_null()) {
          auto name = record.at("split").get<std::string>();
          auto parsed = split_from_string(name);
          if (!parsed) {
            throw Error(ErrorCode::kParse,
                        fmt::format("unknown split \"{}\"", name));
          }
          split = *parsed;
        }
        dataset.add_user(user_from_json(record), split);
      } else if (type == "edge") {
        pending.push_back({record.at("src").get<std::string>(),
                           record.at("dst").get<std::string>(), line_no});
      } else {
        throw Error(ErrorCode::kParse,
                    fmt::format("unknown record type \"{}\"", type));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("line {}: malformed record: {}", line_no,
                              e.what()));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIntegrity) throw;
      throw Error(e.code(), fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  // Edges are resolved after all users are known so files need not be
  // topologically ordered.
  std::size_t duplicates = 0;
  for (const auto& edge : pending) {
    if (!dataset.add_edge(edge.src, edge.dst)) ++duplicates;
  }
  if (stats) {
    stats->users = dataset.size();
    stats->edges = dataset.edges().size();
    stats->duplicate_edges = duplicates;
  }
  return dataset;
}

SocialDataset load_dataset(const std::filesystem::path& path,
                           LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("cannot open dataset {}", path.string()));
  }
  SocialDataset dataset = parse_dataset(in, stats);
  dataset.set_provenance(path.string());
  return dataset;
}

void write_dataset(const SocialDataset& dataset, std::ostream& out) {
  for (const auto& [id, user] : dataset.users()) {
    out << user_to_json(user, dataset.split_of(id)).dump() << '\n';
  }
  for (const auto& [src, dst] : dataset.edges()) {
    json j;
    j["type"] = "edge";
    j["src"] = src;
    j["dst"] = dst;
    out << j.dump() << '\n';
  }
}

std::string serialize_dataset(const SocialDataset& dataset) {
  std::ostringstream out;
  write_dataset(dataset, out);
  return out.str();
}

SocialDataset apply_edits(const SocialDataset& dataset, const EditLog& log) {
  SocialDataset out = dataset;
  for (std::size_t i = 0; i < log.edits.size(); ++i) {
    const Edit& edit = log.edits[i];
    std::visit(
        [&](const auto& change) {
          using T = std::decay_t<decltype(change)>;
          if constexpr (std::is_same_v<T, TextRewrite>) {
            UserRecord& user = out.mutable_user(change.user_id);
            std::string* field = &user.description;
            if (change.post_index) {
              if (*change.post_index >= user.posts.size()) {
                throw Error(ErrorCode::kNotFound,
                            fmt::format("edit {}: user {} has no post {}", i,
                                        change.user_id, *change.post_index));
              }
              field = &user.posts[*change.post_index];
            }
            if (*field != change.old_text) {
              throw Error(ErrorCode::kConflict,
                          fmt::format("edit {}: text of user {} does not match "
                                      "the rewrite's original",
                                      i, change.user_id));
            }
            *field = change.new_text;
          } else if constexpr (std::is_same_v<T, AddFollow>) {
            if (out.has_edge(change.src, change.dst)) {
              throw Error(ErrorCode::kConflict,
                          fmt::format("edit {}: edge {}→{} already exists", i,
                                      change.src, change.dst));
            }
            out.add_edge(change.src, change.dst);
          } else {
            if (!out.has_edge(change.src, change.dst)) {
              throw Error(ErrorCode::kNotFound,
                          fmt::format("edit {}: edge {}→{} does not exist", i,
                                      change.src, change.dst));
            }
            out.remove_edge(change.src, change.dst);
          }
        },
        edit.change);
  }
  out.validate();
  return out;
}

}  // namespace botarms

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace botarms {

// One (text version, classifier score) pair of a guided rewrite; entry 0 is
// the original text.
struct TrajectoryStep {
  std::string text;
  double score = 0.0;
  bool operator==(const TrajectoryStep&) const = default;
};

using GuidanceTrajectory = std::vector<TrajectoryStep>;

struct TextRewrite {
  std::string user_id;
  // Empty for the description; otherwise the index into UserRecord::posts.
  std::optional<std::size_t> post_index;
  std::string old_text;
  std::string new_text;
  GuidanceTrajectory trajectory;

  bool is_noop() const { return old_text == new_text; }
  bool operator==(const TextRewrite&) const = default;
};

struct AddFollow {
  std::string src;
  std::string dst;
  bool operator==(const AddFollow&) const = default;
};

struct RemoveFollow {
  std::string src;
  std::string dst;
  bool operator==(const RemoveFollow&) const = default;
};

using EditChange = std::variant<TextRewrite, AddFollow, RemoveFollow>;

struct Edit {
  EditChange change;
  std::string strategy;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  bool operator==(const Edit&) const = default;
};

struct EditLog {
  std::vector<Edit> edits;

  bool empty() const { return edits.empty(); }
  std::size_t size() const { return edits.size(); }
  void append(const EditLog& other) {
    edits.insert(edits.end(), other.edits.begin(), other.edits.end());
  }
  bool operator==(const EditLog&) const = default;
};

// Inverse log: edits reversed in order, each one inverted. Applying a log and
// then its inverse restores the original dataset.
EditLog revert(const EditLog& log);

// The user whose record or out-edges an edit touches.
const std::string& edit_subject(const Edit& edit);

// JSON Lines, one edit per line.
void write_edit_log(const EditLog& log, std::ostream& out);
EditLog read_edit_log(std::istream& in);
EditLog load_edit_log(const std::filesystem::path& path);

}  // namespace botarms

#include "botarms/edit_log.h"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "botarms/error.h"

namespace botarms {

using json = nlohmann::json;

EditLog revert(const EditLog& log) {
  EditLog out;
  out.edits.reserve(log.edits.size());
  for (auto it = log.edits.rbegin(); it != log.edits.rend(); ++it) {
    Edit inverse = *it;
    inverse.change = std::visit(
        [](const auto& change) -> EditChange {
          using T = std::decay_t<decltype(change)>;
          if constexpr (std::is_same_v<T, TextRewrite>) {
            TextRewrite undo = change;
            std::swap(undo.old_text, undo.new_text);
            return undo;
          } else if constexpr (std::is_same_v<T, AddFollow>) {
            return RemoveFollow{change.src, change.dst};
          } else {
            return AddFollow{change.src, change.dst};
          }
        },
        it->change);
    out.edits.push_back(std::move(inverse));
  }
  return out;
}

const std::string& edit_subject(const Edit& edit) {
  return std::visit(
      [](const auto& change) -> const std::string& {
        using T = std::decay_t<decltype(change)>;
        if constexpr (std::is_same_v<T, TextRewrite>) {
          return change.user_id;
        } else {
          return change.src;
        }
      },
      edit.change);
}

namespace {

json edit_to_json(const Edit& edit) {
  json j;
  std::visit(
      [&](const auto& change) {
        using T = std::decay_t<decltype(change)>;
        if constexpr (std::is_same_v<T, TextRewrite>) {
          j["kind"] = "text_rewrite";
          j["user_id"] = change.user_id;
          j["field"] = change.post_index
                           ? fmt::format("post:{}", *change.post_index)
                           : std::string("description");
          j["old"] = change.old_text;
          j["new"] = change.new_text;
          json steps = json::array();
          for (const auto& step : change.trajectory) {
            steps.push_back({{"text", step.text}, {"score", step.score}});
          }
          j["trajectory"] = steps;
        } else {
          j["kind"] = std::is_same_v<T, AddFollow> ? "add_follow"
                                                   : "remove_follow";
          j["src"] = change.src;
          j["dst"] = change.dst;
        }
      },
      edit.change);
  j["strategy"] = edit.strategy;
  j["seed"] = edit.seed;
  j["metadata"] = edit.metadata;
  return j;
}

Edit edit_from_json(const json& j) {
  Edit edit;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "text_rewrite") {
    TextRewrite rewrite;
    rewrite.user_id = j.at("user_id").get<std::string>();
    const auto field = j.at("field").get<std::string>();
    if (field.starts_with("post:")) {
      rewrite.post_index = std::stoull(field.substr(5));
    } else if (field != "description") {
      throw Error(ErrorCode::kParse,
                  fmt::format("unknown rewrite field \"{}\"", field));
    }
    rewrite.old_text = j.at("old").get<std::string>();
    rewrite.new_text = j.at("new").get<std::string>();
    if (j.contains("trajectory")) {
      for (const auto& step : j.at("trajectory")) {
        rewrite.trajectory.push_back(
            {step.at("text").get<std::string>(), step.at("score").get<double>()});
      }
    }
    edit.change = std::move(rewrite);
  } else if (kind == "add_follow") {
    edit.change = AddFollow{j.at("src").get<std::string>(),
                            j.at("dst").get<std::string>()};
  } else if (kind == "remove_follow") {
    edit.change = RemoveFollow{j.at("src").get<std::string>(),
                               j.at("dst").get<std::string>()};
  } else {
    throw Error(ErrorCode::kParse, fmt::format("unknown edit kind \"{}\"", kind));
  }
  edit.strategy = j.value("strategy", std::string());
  edit.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("metadata")) {
    edit.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  }
  return edit;
}

}  // namespace

void write_edit_log(const EditLog& log, std::ostream& out) {
  for (const auto& edit : log.edits) {
    out << edit_to_json(edit).dump() << '\n';
  }
}

EditLog read_edit_log(std::istream& in) {
  EditLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      log.edits.push_back(edit_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("edit log line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      throw Error(e.code(),
                  fmt::format("edit log line {}: {}", line_no, e.what()));
    } catch (const std::logic_error& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("edit log line {}: {}", line_no, e.what()));
    }
  }
  return log;
}

EditLog load_edit_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("cannot open edit log {}", path.string()));
  }
  return read_edit_log(in);
}

}  // namespace botarms

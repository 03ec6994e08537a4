#include "rewardkit/rollout_log.hpp"

#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include "rewardkit/errors.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

std::string required_string(const json& obj, const char* key) {
  if (!obj.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  if (!obj.at(key).is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return {};
  if (!obj.at(key).is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

RolloutGroup parse_rollout_group(const json& obj) {
  if (!obj.is_object()) throw ValidationError("record is not a JSON object");
  RolloutGroup g;
  g.group_id = required_string(obj, "group_id");
  if (g.group_id.empty()) throw ValidationError("group_id must be non-empty");
  g.question = optional_string(obj, "question");
  g.dataset = optional_string(obj, "dataset");
  g.ground_truth = required_string(obj, "ground_truth");
  if (g.ground_truth.empty()) throw ValidationError("ground_truth must be non-empty");
  if (obj.contains("image_ref") && !obj.at("image_ref").is_null()) {
    if (!obj.at("image_ref").is_string()) throw ValidationError("field 'image_ref' must be a string");
    g.image_ref = obj.at("image_ref").get<std::string>();
  }
  if (!obj.contains("completions") || !obj.at("completions").is_array()) {
    throw ValidationError("field 'completions' must be an array");
  }
  for (const auto& c : obj.at("completions")) {
    if (!c.is_string()) throw ValidationError("completions must be strings");
    g.completions.push_back(c.get<std::string>());
  }
  if (g.completions.size() < 2) {
    throw ValidationError("group needs at least 2 completions, got " +
                          std::to_string(g.completions.size()));
  }
  return g;
}

RolloutLogReader::RolloutLogReader(const std::filesystem::path& path, double max_malformed_fraction)
    : path_(path), in_(path), max_malformed_fraction_(max_malformed_fraction) {
  if (!in_) throw ConfigError("cannot read rollout log " + path.string());
}

std::optional<RolloutGroup> RolloutLogReader::next() {
  if (finished_) return std::nullopt;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (blank(line)) continue;
    ++records_;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      malformed_.push_back({line_number_, std::string("invalid JSON: ") + e.what()});
      spdlog::warn("{}:{}: skipping line: {}", path_.string(), line_number_, malformed_.back().reason);
      continue;
    }
    RolloutGroup group;
    try {
      group = parse_rollout_group(obj);
    } catch (const ValidationError& e) {
      malformed_.push_back({line_number_, e.what()});
      spdlog::warn("{}:{}: skipping line: {}", path_.string(), line_number_, e.what());
      continue;
    }
    if (!seen_ids_.insert(group.group_id).second) {
      throw ValidationError(path_.string() + ":" + std::to_string(line_number_) +
                            ": duplicate group_id '" + group.group_id + "'");
    }
    return group;
  }
  if (in_.bad()) throw ConfigError("error while reading rollout log " + path_.string());
  finished_ = true;
  if (records_ > 0) {
    const double fraction = static_cast<double>(malformed_.size()) / static_cast<double>(records_);
    if (fraction > max_malformed_fraction_) {
      throw ValidationError(path_.string() + ": " + std::to_string(malformed_.size()) + " of " +
                            std::to_string(records_) + " lines malformed (limit " +
                            std::to_string(max_malformed_fraction_ * 100.0) + "%); first at line " +
                            std::to_string(malformed_.front().line_number) + ": " +
                            malformed_.front().reason);
    }
  }
  return std::nullopt;
}

RolloutLog read_rollout_log(const std::filesystem::path& path, double max_malformed_fraction) {
  RolloutLogReader reader(path, max_malformed_fraction);
  RolloutLog log;
  while (auto group = reader.next()) log.groups.push_back(std::move(*group));
  log.malformed = reader.malformed();
  return log;
}

}  // namespace rewardkit

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rewardkit {

// One question with its sampled completions. image_ref is carried through
// untouched and never opened.
struct RolloutGroup {
  std::string group_id;
  std::string question;
  std::string dataset;
  std::string ground_truth;
  std::optional<std::string> image_ref;
  std::vector<std::string> completions;
};

// Throws ValidationError naming the offending field.
RolloutGroup parse_rollout_group(const nlohmann::json& obj);

struct MalformedLine {
  std::size_t line_number = 0;
  std::string reason;
};

// Streams a JSONL rollout log one validated group at a time. Malformed lines
// are recorded and skipped; a repeated group_id is fatal. When the stream ends,
// a malformed fraction above the limit is fatal too.
class RolloutLogReader {
 public:
  RolloutLogReader(const std::filesystem::path& path, double max_malformed_fraction = 0.1);

  std::optional<RolloutGroup> next();

  const std::vector<MalformedLine>& malformed() const noexcept { return malformed_; }
  std::size_t records_seen() const noexcept { return records_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  double max_malformed_fraction_;
  std::size_t line_number_ = 0;
  std::size_t records_ = 0;
  std::vector<MalformedLine> malformed_;
  std::set<std::string> seen_ids_;
  bool finished_ = false;
};

struct RolloutLog {
  std::vector<RolloutGroup> groups;
  std::vector<MalformedLine> malformed;
};

RolloutLog read_rollout_log(const std::filesystem::path& path, double max_malformed_fraction = 0.1);

}  // namespace rewardkit

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rewardkit/advantage.hpp"
#include "rewardkit/config.hpp"
#include "rewardkit/ensemble.hpp"
#include "rewardkit/policy_sim.hpp"
#include "rewardkit/rollout_log.hpp"

namespace rewardkit {

// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_real(double x);

struct ScoredGroup {
  RolloutGroup group;
  std::vector<ParsedResponse> parsed;
  RewardMatrix rewards;
  AdvantageDiagnostics diagnostics;
};

struct QuarantinedGroup {
  std::string group_id;
  std::string error;
};

struct ScoreBatch {
  std::vector<ScoredGroup> scored;            // input order
  std::vector<QuarantinedGroup> quarantined;  // input order
};

// Scores groups on up to `parallelism` threads. Output order is input order
// whatever the completion order. Scoring/validation errors quarantine a group.
ScoreBatch score_groups(const std::vector<RolloutGroup>& groups, const RewardRegistry& registry,
                        const NormalizationConfig& norm, std::size_t parallelism);

nlohmann::json scored_group_json(const ScoredGroup& scored, Strategy strategy);
nlohmann::json diagnostics_json(const AdvantageDiagnostics& d);

// step_or_group, <c>_mean, <c>_std ..., aggregate_mean, aggregate_std, avg_completion_chars
std::string aggregate_csv_header(const std::vector<std::string>& components);
std::string aggregate_csv_row(const ScoredGroup& scored, const NormalizationConfig& norm);

struct ScoreRunSummary {
  std::size_t groups_in = 0;
  std::size_t scored = 0;
  std::size_t quarantined = 0;
  std::vector<MalformedLine> malformed;
  nlohmann::json report;

  int exit_code() const { return quarantined == 0 ? 0 : 2; }
};

// Reads the log in batches and writes, under out_dir:
//   scored.jsonl, aggregate.csv, summary.json, dead_letter.jsonl
ScoreRunSummary score_log(const RunConfig& cfg, const std::filesystem::path& log_path,
                          const std::filesystem::path& out_dir, const ModelServices& services);

// Fraction of pairs matching in either direction. Throws ValidationError on an empty list.
double evaluate_accuracy(const std::vector<std::pair<std::string, std::string>>& pairs);

// Accepts a JSON array or JSONL of {"pred", "gt"} objects or [pred, gt] pairs.
// With extract_answer, the answer block of a tagged pred is used when present.
std::vector<std::pair<std::string, std::string>> read_prediction_pairs(
    const std::filesystem::path& path, bool extract_answer);

// Simulation reports.
std::string trace_csv_header(const TrainingTrace& trace);
std::string trace_csv(const TrainingTrace& trace);

struct TrailingStats {
  std::size_t steps = 0;
  std::vector<double> component_mean;
  double aggregate_mean = 0.0;
  double aggregate_std = 0.0;  // pooled over every sample in the window
};

// Statistics over the last `window` sampled steps (row 0 excluded).
TrailingStats trailing_stats(const TrainingTrace& trace, std::size_t window);

nlohmann::json trace_summary(const TrainingTrace& trace, const GrpoConfig& cfg);

// trace.csv and summary.json under out_dir.
void write_trace(const TrainingTrace& trace, const GrpoConfig& cfg,
                 const std::filesystem::path& out_dir);

}  // namespace rewardkit

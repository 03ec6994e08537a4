#include "rewardkit/pipeline.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "rewardkit/errors.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

constexpr std::size_t kScoreBatchSize = 256;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("cannot format real");
  return std::string(buf, ptr);
}

ScoreBatch score_groups(const std::vector<RolloutGroup>& groups, const RewardRegistry& registry,
                        const NormalizationConfig& norm, std::size_t parallelism) {
  std::vector<std::optional<ScoredGroup>> results(groups.size());
  std::vector<std::optional<std::string>> errors(groups.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= groups.size()) return;
      const RolloutGroup& g = groups[i];
      try {
        const GroundTruth gt(g.ground_truth, g.dataset);
        std::vector<ParsedResponse> parsed;
        parsed.reserve(g.completions.size());
        for (const auto& c : g.completions) parsed.push_back(parse_tagged_response(c));
        RewardMatrix m = score_parsed_group(parsed, gt, registry);
        AdvantageDiagnostics diag = advantage_diagnostics(m, norm);
        results[i].emplace(ScoredGroup{g, std::move(parsed), std::move(m), std::move(diag)});
      } catch (const ScoringError& e) {
        errors[i] = e.what();
      } catch (const ValidationError& e) {
        errors[i] = e.what();
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = groups.size();
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, groups.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  ScoreBatch batch;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (results[i]) {
      batch.scored.push_back(std::move(*results[i]));
    } else {
      batch.quarantined.push_back({groups[i].group_id, errors[i].value_or("unknown error")});
    }
  }
  return batch;
}

json diagnostics_json(const AdvantageDiagnostics& d) {
  json components = json::array();
  json grpo_corr = json::object();
  json mrn_corr = json::object();
  for (std::size_t k = 0; k < d.components.size(); ++k) {
    components.push_back({{"name", d.components[k]},
                          {"mean", d.component_stats[k].mean},
                          {"std", d.component_stats[k].std}});
    grpo_corr[d.components[k]] = optional_json(d.grpo_correlation[k]);
    mrn_corr[d.components[k]] = optional_json(d.mrn_correlation[k]);
  }
  return {{"components", components},
          {"aggregate", {{"mean", d.aggregate_stats.mean}, {"std", d.aggregate_stats.std}}},
          {"correlation", {{"grpo", grpo_corr}, {"mrn", mrn_corr}}}};
}

json scored_group_json(const ScoredGroup& s, Strategy strategy) {
  const auto& g = s.group;
  json think_chars = json::array();
  json think_words = json::array();
  json completion_chars = json::array();
  json format_valid = json::array();
  json answers = json::array();
  for (const auto& p : s.parsed) {
    think_chars.push_back(p.think_length);
    think_words.push_back(word_count(p.think.value_or("")));
    completion_chars.push_back(utf8_length(p.raw));
    format_valid.push_back(p.format_valid);
    answers.push_back(p.answer ? json(*p.answer) : json(nullptr));
  }
  const auto& d = s.diagnostics;
  const std::size_t k_count = s.rewards.num_components();
  json per_component = json::array();
  for (std::size_t i = 0; i < s.rewards.group_size(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < k_count; ++k) row.push_back((*d.mrn.per_component)[i * k_count + k]);
    per_component.push_back(row);
  }
  const auto& chosen = strategy == Strategy::kGrpo ? d.grpo : d.mrn;
  json out;
  out["group_id"] = g.group_id;
  out["dataset"] = g.dataset;
  out["question"] = g.question;
  out["ground_truth"] = g.ground_truth;
  out["image_ref"] = g.image_ref ? json(*g.image_ref) : json(nullptr);
  out["components"] = s.rewards.components();
  out["rewards"] = s.rewards.rows();
  out["answers"] = answers;
  out["format_valid"] = format_valid;
  out["think_chars"] = think_chars;
  out["think_words"] = think_words;
  out["completion_chars"] = completion_chars;
  out["strategy"] = to_string(strategy);
  out["advantage"] = chosen.values;
  out["advantages"] = {{"grpo", d.grpo.values}, {"mrn", d.mrn.values}};
  out["mrn_per_component"] = per_component;
  out["diagnostics"] = diagnostics_json(d);
  return out;
}

std::string aggregate_csv_header(const std::vector<std::string>& components) {
  std::string h = "step_or_group";
  for (const auto& c : components) h += "," + csv_field(c + "_mean") + "," + csv_field(c + "_std");
  h += ",aggregate_mean,aggregate_std,avg_completion_chars";
  return h;
}

std::string aggregate_csv_row(const ScoredGroup& s, const NormalizationConfig& norm) {
  std::string row = csv_field(s.group.group_id);
  for (std::size_t k = 0; k < s.rewards.num_components(); ++k) {
    const auto st = group_stats(s.rewards.column(k));
    row += "," + format_real(st.mean) + "," + format_real(st.std);
  }
  const auto agg = group_stats(aggregate_rewards(s.rewards, norm));
  double chars = 0.0;
  for (const auto& p : s.parsed) chars += static_cast<double>(utf8_length(p.raw));
  chars /= static_cast<double>(s.parsed.size());
  row += "," + format_real(agg.mean) + "," + format_real(agg.std) + "," + format_real(chars);
  return row;
}

ScoreRunSummary score_log(const RunConfig& cfg, const std::filesystem::path& log_path,
                          const std::filesystem::path& out_dir, const ModelServices& services) {
  const RewardRegistry registry = build_registry(cfg, services);
  RolloutLogReader reader(log_path, cfg.max_malformed_fraction);
  std::filesystem::create_directories(out_dir);
  auto scored_out = open_output(out_dir / "scored.jsonl");
  auto csv_out = open_output(out_dir / "aggregate.csv");
  auto dead_out = open_output(out_dir / "dead_letter.jsonl");
  csv_out << aggregate_csv_header(registry.names()) << '\n';

  ScoreRunSummary summary;
  const std::size_t k_count = registry.size();
  std::vector<double> component_sum(k_count, 0.0);
  double completions = 0.0;
  double think_chars = 0.0;
  double think_words = 0.0;
  double completion_chars = 0.0;
  double format_valid = 0.0;

  std::vector<RolloutGroup> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    ScoreBatch result = score_groups(batch, registry, cfg.normalization, cfg.parallelism);
    for (const auto& s : result.scored) {
      scored_out << scored_group_json(s, cfg.strategy).dump() << '\n';
      csv_out << aggregate_csv_row(s, cfg.normalization) << '\n';
      for (std::size_t i = 0; i < s.rewards.group_size(); ++i) {
        for (std::size_t k = 0; k < k_count; ++k) component_sum[k] += s.rewards(i, k);
        const auto& p = s.parsed[i];
        completions += 1.0;
        think_chars += static_cast<double>(p.think_length);
        think_words += static_cast<double>(word_count(p.think.value_or("")));
        completion_chars += static_cast<double>(utf8_length(p.raw));
        format_valid += p.format_valid ? 1.0 : 0.0;
      }
    }
    for (const auto& q : result.quarantined) {
      spdlog::error("group '{}' quarantined: {}", q.group_id, q.error);
      dead_out << json{{"group_id", q.group_id}, {"error", q.error}}.dump() << '\n';
    }
    summary.scored += result.scored.size();
    summary.quarantined += result.quarantined.size();
    batch.clear();
  };

  while (auto group = reader.next()) {
    ++summary.groups_in;
    batch.push_back(std::move(*group));
    if (batch.size() >= kScoreBatchSize) flush();
  }
  flush();
  summary.malformed = reader.malformed();

  if (cfg.cache.path && !cfg.cache.read_only && services.cache && cfg.uses_model_rewards()) {
    services.cache->save(*cfg.cache.path);
  }

  json malformed = json::array();
  for (const auto& m : summary.malformed) {
    malformed.push_back({{"line", m.line_number}, {"reason", m.reason}});
  }
  json means = json::object();
  const auto names = registry.names();
  for (std::size_t k = 0; k < k_count; ++k) {
    means[names[k]] = completions > 0 ? json(component_sum[k] / completions) : json(nullptr);
  }
  auto per_completion = [&](double total) {
    return completions > 0 ? json(total / completions) : json(nullptr);
  };
  summary.report = {{"groups_in", summary.groups_in},
                    {"scored", summary.scored},
                    {"quarantined", summary.quarantined},
                    {"malformed_lines", malformed},
                    {"strategy", to_string(cfg.strategy)},
                    {"epsilon", cfg.normalization.epsilon},
                    {"components", names},
                    {"component_means", means},
                    {"completions", static_cast<std::size_t>(completions)},
                    {"format_valid_rate", per_completion(format_valid)},
                    {"avg_think_chars", per_completion(think_chars)},
                    {"avg_think_words", per_completion(think_words)},
                    {"avg_completion_chars", per_completion(completion_chars)},
                    {"judge_model", cfg.judge ? json(cfg.judge->model_id) : json(nullptr)},
                    {"embedding_model", cfg.embedding ? json(cfg.embedding->model_id) : json(nullptr)}};
  auto summary_out = open_output(out_dir / "summary.json");
  summary_out << summary.report.dump(2) << '\n';
  return summary;
}

double evaluate_accuracy(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw ValidationError("accuracy is undefined for an empty prediction list");
  std::size_t correct = 0;
  for (const auto& [pred, gt] : pairs) {
    if (substring_match(pred, gt, MatchMode::kEitherDirection)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

std::vector<std::pair<std::string, std::string>> read_prediction_pairs(
    const std::filesystem::path& path, bool extract_answer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<json> records;
  const auto first = text.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && text[first] == '[' && json::accept(text)) {
      for (const auto& item : json::parse(text)) records.push_back(item);
    } else {
      std::istringstream lines(text);
      std::string line;
      while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        records.push_back(json::parse(line));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& r : records) {
    std::string pred;
    std::string gt;
    if (r.is_array() && r.size() == 2 && r[0].is_string() && r[1].is_string()) {
      pred = r[0].get<std::string>();
      gt = r[1].get<std::string>();
    } else if (r.is_object() && r.contains("pred") && r.contains("gt") && r["pred"].is_string() &&
               r["gt"].is_string()) {
      pred = r["pred"].get<std::string>();
      gt = r["gt"].get<std::string>();
    } else {
      throw ValidationError(path.string() + ": each record must be {\"pred\", \"gt\"} or [pred, gt]");
    }
    if (extract_answer) {
      if (auto answer = parse_tagged_response(pred).answer) pred = *answer;
    }
    pairs.emplace_back(std::move(pred), std::move(gt));
  }
  return pairs;
}

std::string trace_csv_header(const TrainingTrace& trace) {
  std::string h = aggregate_csv_header(trace.components);
  h += ",expected_completion_chars,avg_think_chars,avg_think_words,advantage_std,surrogate,kl,"
       "mean_ratio,clip_fraction,grad_norm";
  for (const auto& c : trace.components) h += "," + csv_field("expected_" + c);
  for (std::size_t j = 0; j < trace.num_templates; ++j) h += ",p" + std::to_string(j);
  return h;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = trace_csv_header(trace) + "\n";
  for (const auto& r : trace.rows) {
    std::string line = std::to_string(r.step);
    for (std::size_t k = 0; k < r.component_mean.size(); ++k) {
      line += "," + format_real(r.component_mean[k]) + "," + format_real(r.component_std[k]);
    }
    for (double v : {r.aggregate_mean, r.aggregate_std, r.avg_completion_chars,
                     r.expected_completion_chars, r.avg_think_chars, r.avg_think_words,
                     r.advantage_std, r.metrics.surrogate, r.metrics.kl, r.metrics.mean_ratio,
                     r.metrics.clip_fraction, r.metrics.grad_norm}) {
      line += "," + format_real(v);
    }
    for (double e : r.expected_component_mean) line += "," + format_real(e);
    for (double p : r.probs) line += "," + format_real(p);
    out += line + "\n";
  }
  return out;
}

TrailingStats trailing_stats(const TrainingTrace& trace, std::size_t window) {
  TrailingStats t;
  const std::size_t sampled = trace.rows.empty() ? 0 : trace.rows.size() - 1;
  t.steps = std::min(window, sampled);
  t.component_mean.assign(trace.components.size(), 0.0);
  if (t.steps == 0) return t;
  double second_moment = 0.0;
  for (std::size_t r = trace.rows.size() - t.steps; r < trace.rows.size(); ++r) {
    const auto& row = trace.rows[r];
    for (std::size_t k = 0; k < t.component_mean.size(); ++k) t.component_mean[k] += row.component_mean[k];
    t.aggregate_mean += row.aggregate_mean;
    second_moment += row.aggregate_std * row.aggregate_std + row.aggregate_mean * row.aggregate_mean;
  }
  const double n = static_cast<double>(t.steps);
  for (double& m : t.component_mean) m /= n;
  t.aggregate_mean /= n;
  t.aggregate_std = std::sqrt(std::max(0.0, second_moment / n - t.aggregate_mean * t.aggregate_mean));
  return t;
}

json trace_summary(const TrainingTrace& trace, const GrpoConfig& cfg) {
  const auto& first = trace.rows.front();
  const auto& last = trace.rows.back();
  const auto trailing = trailing_stats(trace, 100);
  json trailing_means = json::object();
  json final_means = json::object();
  json final_expected = json::object();
  for (std::size_t k = 0; k < trace.components.size(); ++k) {
    trailing_means[trace.components[k]] = trailing.component_mean[k];
    final_means[trace.components[k]] = last.component_mean[k];
    final_expected[trace.components[k]] = last.expected_component_mean[k];
  }
  return {{"strategy", to_string(trace.strategy)},
          {"seed", cfg.seed},
          {"steps", trace.rows.size() - 1},
          {"group_size", cfg.group_size},
          {"clip_epsilon", std::isinf(cfg.clip_epsilon) ? json("inf") : json(cfg.clip_epsilon)},
          {"kl_beta", cfg.kl_beta},
          {"learning_rate", cfg.learning_rate},
          {"epsilon", cfg.normalization.epsilon},
          {"components", trace.components},
          {"initial_probs", first.probs},
          {"final_probs", last.probs},
          {"final_logits", trace.final_logits},
          {"initial_avg_completion_chars", first.avg_completion_chars},
          {"final_avg_completion_chars", last.avg_completion_chars},
          {"final_expected_completion_chars", last.expected_completion_chars},
          {"final_component_means", final_means},
          {"final_expected_component_means", final_expected},
          {"trailing_100",
           {{"steps", trailing.steps},
            {"component_means", trailing_means},
            {"aggregate_mean", trailing.aggregate_mean},
            {"aggregate_std", trailing.aggregate_std}}}};
}

void write_trace(const TrainingTrace& trace, const GrpoConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto csv = open_output(out_dir / "trace.csv");
  csv << trace_csv(trace);
  auto summary = open_output(out_dir / "summary.json");
  summary << trace_summary(trace, cfg).dump(2) << '\n';
}

}  // namespace rewardkit

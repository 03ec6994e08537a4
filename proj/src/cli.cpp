#include "rewardkit/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rewardkit/advantage.hpp"
#include "rewardkit/config.hpp"
#include "rewardkit/errors.hpp"
#include "rewardkit/mock_server.hpp"
#include "rewardkit/pipeline.hpp"
#include "rewardkit/prompts.hpp"

namespace rewardkit {

using json = nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void handle_stop_signal(int) { g_stop = true; }

void use_stderr_logger(const std::string& level) {
  auto logger = spdlog::get("rewardkit");
  if (!logger) logger = spdlog::stderr_color_mt("rewardkit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RewardMatrix read_matrix(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("rows") || !doc["rows"].is_array()) {
    throw ValidationError(path + ": expected {\"components\": [...], \"rows\": [[...], ...]}");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : doc["rows"]) {
    if (!r.is_array()) throw ValidationError(path + ": every row must be an array of numbers");
    std::vector<double> row;
    for (const auto& v : r) {
      if (!v.is_number()) throw ValidationError(path + ": every row must be an array of numbers");
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> names;
  if (doc.contains("components")) {
    if (!doc["components"].is_array()) throw ValidationError(path + ": components must be an array");
    for (const auto& c : doc["components"]) {
      if (!c.is_string()) throw ValidationError(path + ": component names must be strings");
      names.push_back(c.get<std::string>());
    }
  } else if (!rows.empty()) {
    for (std::size_t k = 0; k < rows.front().size(); ++k) names.push_back("r" + std::to_string(k));
  }
  return RewardMatrix::from_rows(std::move(names), rows);
}

int cmd_advantage(std::ostream& out, const std::string& path, const std::string& strategy_name,
                  double epsilon, const std::vector<double>& weights) {
  const Strategy strategy = parse_strategy(strategy_name);
  const RewardMatrix m = read_matrix(path);
  NormalizationConfig norm;
  norm.epsilon = epsilon;
  norm.weights = weights;
  norm.validate(m.num_components());
  const AdvantageVector adv = normalize(m, strategy, norm);
  json doc{{"strategy", to_string(strategy)},
           {"epsilon", epsilon},
           {"components", m.components()},
           {"advantage", adv.values}};
  if (adv.per_component) {
    json pc = json::array();
    const std::size_t k_count = m.num_components();
    for (std::size_t i = 0; i < m.group_size(); ++i) {
      pc.push_back(std::vector<double>(adv.per_component->begin() + static_cast<long>(i * k_count),
                                       adv.per_component->begin() + static_cast<long>((i + 1) * k_count)));
    }
    doc["per_component"] = pc;
  }
  out << doc.dump(2) << '\n';
  return 0;
}

int cmd_score(std::ostream& out, const std::string& log, const std::string& config_path,
              const std::string& out_dir, std::size_t parallelism, const std::string& strategy) {
  RunConfig cfg = RunConfig::load(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (parallelism > 0) cfg.parallelism = parallelism;
  if (!strategy.empty()) cfg.strategy = parse_strategy(strategy);
  cfg.validate();
  const ModelServices services = make_model_services(cfg);
  const ScoreRunSummary summary = score_log(cfg, log, cfg.output_dir, services);
  out << summary.report.dump(2) << '\n';
  if (summary.quarantined > 0) {
    spdlog::error("{} of {} groups quarantined; see {}", summary.quarantined, summary.groups_in,
                  (cfg.output_dir / "dead_letter.jsonl").string());
  }
  return summary.exit_code();
}

int cmd_simulate(std::ostream& out, const std::string& config_path, const std::string& out_dir,
                 const std::string& strategy, long long steps, long long seed) {
  RunConfig cfg = RunConfig::load(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (!strategy.empty()) cfg.strategy = parse_strategy(strategy);
  if (steps >= 0) cfg.simulation.steps = static_cast<std::size_t>(steps);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.validate();
  const ModelServices services = make_model_services(cfg);
  const SimulationEnv env = make_simulation_env(cfg, services);
  const GrpoConfig gcfg = make_grpo_config(cfg);
  const TrainingTrace trace = run_training(env, gcfg);
  write_trace(trace, gcfg, cfg.output_dir);
  out << trace_summary(trace, gcfg).dump(2) << '\n';
  return 0;
}

int cmd_eval(std::ostream& out, const std::string& path, bool extract_answer) {
  const auto pairs = read_prediction_pairs(path, extract_answer);
  std::size_t correct = 0;
  for (const auto& [pred, gt] : pairs) {
    if (substring_match(pred, gt, MatchMode::kEitherDirection)) ++correct;
  }
  const double accuracy = evaluate_accuracy(pairs);
  out << json{{"n", pairs.size()}, {"correct", correct}, {"accuracy", accuracy}}.dump(2) << '\n';
  return 0;
}

int cmd_render(std::ostream& out, const std::string& kind_name, const std::string& dataset,
               const std::string& template_file, const std::string& pred, const std::string& gt,
               const std::string& solution) {
  const PromptKind kind = parse_prompt_kind(kind_name);
  PromptTemplate tpl = PromptTemplate::bundled(kind);
  if (!template_file.empty()) {
    tpl.body = read_text(template_file);
    tpl.validate();
  }
  PromptBindings bindings;
  if (!dataset.empty()) bindings["DATASET"] = dataset;
  if (!pred.empty()) bindings["PRED"] = pred;
  if (!gt.empty()) bindings["GT"] = gt;
  if (!solution.empty()) bindings["SOLUTION"] = solution;
  out << render_prompt(tpl, bindings);
  return 0;
}

int cmd_mock_serve(std::ostream& out, const std::string& table_path, const std::string& host, int port) {
  MockServer server(MockTable::load(table_path));
  server.start(host, port);
  out << server.base_url() << std::endl;
  g_stop = false;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  spdlog::info("served {} chat and {} embedding requests", server.chat_requests(),
               server.embedding_requests());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reward ensemble scoring, group advantage normalization and policy simulation"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  std::string path;
  std::string config_path;
  std::string out_dir;
  std::string strategy;
  std::size_t parallelism = 0;

  auto* score = app.add_subcommand("score", "Score a rollout log and write per-group reports");
  score->add_option("log", path, "Rollout log (JSONL)")->required();
  score->add_option("--config", config_path, "TOML run config")->required();
  score->add_option("--out", out_dir, "Output directory (overrides the config)");
  score->add_option("--parallelism", parallelism, "Worker threads (overrides the config)");
  score->add_option("--strategy", strategy, "grpo|mrn (overrides the config)")
      ->check(CLI::IsMember({"grpo", "mrn"}));

  double epsilon = NormalizationConfig{}.epsilon;
  std::vector<double> weights;
  auto* advantage = app.add_subcommand("advantage", "Normalize a reward matrix into advantages");
  advantage->add_option("matrix", path, "JSON {\"components\": [...], \"rows\": [[...]]}")->required();
  advantage->add_option("--strategy", strategy, "grpo|mrn")
      ->required()
      ->check(CLI::IsMember({"grpo", "mrn"}));
  advantage->add_option("--epsilon", epsilon, "Denominator stabilizer");
  advantage->add_option("--weights", weights, "Per-component aggregation weights");

  long long steps = -1;
  long long seed = -1;
  auto* simulate = app.add_subcommand("simulate", "Run the softmax-policy GRPO simulation");
  simulate->add_option("--config", config_path, "TOML run config")->required();
  simulate->add_option("--out", out_dir, "Output directory (overrides the config)");
  simulate->add_option("--strategy", strategy, "grpo|mrn (overrides the config)")
      ->check(CLI::IsMember({"grpo", "mrn"}));
  simulate->add_option("--steps", steps, "Training steps (overrides the config)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", seed, "RNG seed (overrides the config)")->check(CLI::NonNegativeNumber);

  bool extract_answer = false;
  auto* eval = app.add_subcommand("eval", "Accuracy of predictions against ground truth");
  eval->add_option("pairs", path, "JSON array or JSONL of {\"pred\", \"gt\"}")->required();
  eval->add_flag("--extract-answer", extract_answer, "Use the <answer> block of tagged predictions");

  std::string kind;
  std::string dataset;
  std::string template_file;
  std::string pred;
  std::string gt;
  std::string solution;
  auto* render = app.add_subcommand("render-prompt", "Print a filled prompt template");
  render->add_option("--kind", kind, "answer_only|cot|judge|sft_cot")
      ->required()
      ->check(CLI::IsMember({"answer_only", "cot", "judge", "sft_cot"}));
  render->add_option("--dataset", dataset, "Dataset / label noun");
  render->add_option("--template", template_file, "Template file replacing the bundled one");
  render->add_option("--pred", pred, "Predicted answer (judge)");
  render->add_option("--gt", gt, "Correct answer (judge)");
  render->add_option("--solution", solution, "Solution text (sft_cot)");

  std::string host = "127.0.0.1";
  int port = 0;
  auto* mock = app.add_subcommand("mock-serve", "Serve scripted judge/embedding replies");
  mock->add_option("table", path, "JSON reply table")->required();
  mock->add_option("--host", host, "Bind address");
  mock->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return 1;
  }

  use_stderr_logger(log_level);
  try {
    if (*score) return cmd_score(out, path, config_path, out_dir, parallelism, strategy);
    if (*advantage) return cmd_advantage(out, path, strategy, epsilon, weights);
    if (*simulate) return cmd_simulate(out, config_path, out_dir, strategy, steps, seed);
    if (*eval) return cmd_eval(out, path, extract_answer);
    if (*render) return cmd_render(out, kind, dataset, template_file, pred, gt, solution);
    if (*mock) return cmd_mock_serve(out, path, host, port);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace rewardkit

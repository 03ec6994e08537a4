// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rewardkit/advantage.hpp"
#include "rewardkit/config.hpp"
#include "rewardkit/http_service.hpp"
#include "rewardkit/mock_server.hpp"
#include "rewardkit/model_rewards.hpp"
#include "rewardkit/pipeline.hpp"
#include "rewardkit/policy_sim.hpp"
#include "rewardkit/rule_rewards.hpp"

using namespace rewardkit;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures(RK_FIXTURES);
const std::string kCli(RK_CLI_PATH);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

int run_cli(const std::vector<std::string>& args, const fs::path& stdout_file) {
  std::string cmd = shell_quote(kCli);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " > " + shell_quote(stdout_file.string()) + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  auto p = fs::temp_directory_path() / ("rewardkit-acceptance-" + tag + "-" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

// Two-pass z-scores in long double; the reference for criterion 3.
std::vector<long double> oracle_z(const std::vector<long double>& xs, long double eps) {
  long double mean = 0;
  for (auto x : xs) mean += x;
  mean /= xs.size();
  long double var = 0;
  for (auto x : xs) var += (x - mean) * (x - mean);
  const long double sd = std::sqrt(var / xs.size());
  std::vector<long double> z;
  for (auto x : xs) z.push_back((x - mean) / (sd + eps));
  return z;
}

std::vector<double> oracle_mrn(const std::vector<std::vector<double>>& rows, long double eps) {
  std::vector<long double> acc(rows.size(), 0);
  for (std::size_t k = 0; k < rows[0].size(); ++k) {
    std::vector<long double> col;
    for (const auto& r : rows) col.push_back(r[k]);
    const auto z = oracle_z(col, eps);
    for (std::size_t i = 0; i < rows.size(); ++i) acc[i] += z[i];
  }
  return {acc.begin(), acc.end()};
}

std::vector<double> oracle_grpo(const std::vector<std::vector<double>>& rows, long double eps) {
  std::vector<long double> agg;
  for (const auto& r : rows) agg.push_back(std::accumulate(r.begin(), r.end(), 0.0L));
  const auto z = oracle_z(agg, eps);
  return {z.begin(), z.end()};
}

std::size_t strict_argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::set<std::size_t> near_argmax(const std::vector<double>& v, double tol) {
  const double top = *std::max_element(v.begin(), v.end());
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (top - v[i] <= tol) s.insert(i);
  }
  return s;
}

std::vector<std::string> names(std::size_t k) {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < k; ++i) n.push_back("r" + std::to_string(i));
  return n;
}

// ---------------------------------------------------------------------------

Outcome mrn_standardization() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> val(-100.0, 100.0);
  const double eps = NormalizationConfig{}.epsilon;
  std::size_t columns = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + rng() % 63;
    const std::size_t k = 1 + rng() % 8;
    std::vector<double> v(g * k);
    for (auto& x : v) x = val(rng);
    const RewardMatrix m(names(k), g, v);
    const auto a = mrn_normalize(m);
    for (std::size_t c = 0; c < k; ++c) {
      if (!(group_stats(m.column(c)).std > eps)) continue;
      std::vector<double> col;
      for (std::size_t i = 0; i < g; ++i) col.push_back((*a.per_component)[i * k + c]);
      const auto st = group_stats(col);
      ++columns;
      o.require(std::abs(st.mean) < 1e-9, "column mean " + format_real(st.mean));
      o.require(std::abs(st.std - 1.0) < 1e-3, "column std " + format_real(st.std));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, "took " + format_real(secs) + " s");
  if (o.pass) o.detail = std::to_string(columns) + " columns, " + format_real(std::round(secs * 1000) / 1000) + " s";
  return o;
}

Outcome single_component_equivalence() {
  Outcome o;
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> val(-100.0, 100.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + rng() % 63;
    std::vector<double> v(g);
    for (auto& x : v) x = val(rng);
    const RewardMatrix m({"r"}, g, v);
    const auto a = grpo_normalize(m);
    const auto b = mrn_normalize(m);
    for (std::size_t i = 0; i < g; ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  }
  o.require(worst <= 1e-12, "max deviation " + format_real(worst));
  if (o.pass) o.detail = "max deviation " + format_real(worst);
  return o;
}

Outcome affine_robustness() {
  Outcome o;
  const std::vector<std::vector<double>> rows = {{10, 0}, {0, 1}, {0, 0}};
  const auto m = RewardMatrix::from_rows({"a", "b"}, rows);
  const double eps = NormalizationConfig{}.epsilon;
  const auto mrn = mrn_normalize(m).values;
  const auto grpo = grpo_normalize(m).values;
  const auto om = oracle_mrn(rows, eps);
  const auto og = oracle_grpo(rows, eps);
  const std::vector<double> mrn_expected{0.707, 0.707, -1.414};
  const std::vector<double> grpo_expected{1.408, -0.593, -0.815};
  for (std::size_t i = 0; i < 3; ++i) {
    o.require(std::abs(om[i] - mrn_expected[i]) < 1e-3, "oracle mrn row " + std::to_string(i));
    o.require(std::abs(og[i] - grpo_expected[i]) < 1e-3, "oracle grpo row " + std::to_string(i));
    o.require(std::abs(mrn[i] - om[i]) < 1e-12, "mrn vs oracle row " + std::to_string(i));
    o.require(std::abs(grpo[i] - og[i]) < 1e-12, "grpo vs oracle row " + std::to_string(i));
  }

  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double sd = group_stats(m.column(k)).std;
    for (double a : {0.1, 10.0, 100.0}) {
      auto scaled = rows;
      for (auto& r : scaled) r[k] *= a;
      const auto after = mrn_normalize(RewardMatrix::from_rows({"a", "b"}, scaled)).values;
      const double bound = 2.0 * eps / std::min(sd, a * sd);
      for (std::size_t i = 0; i < 3; ++i) {
        const double change = std::abs(after[i] - mrn[i]);
        worst_ratio = std::max(worst_ratio, change / bound);
        o.require(change < bound, "component " + std::to_string(k) + " x" + format_real(a) + " row " +
                                      std::to_string(i) + " moved " + format_real(change));
      }
      // The argmax may only move among rows whose unperturbed advantage is
      // within the bound of the maximum.
      o.require(near_argmax(mrn, bound).contains(strict_argmax(after)),
                "mrn argmax left the top set for component " + std::to_string(k) + " x" + format_real(a));
      const auto sorted = [&] {
        auto v = mrn;
        std::sort(v.rbegin(), v.rend());
        return v;
      }();
      if (sorted[0] - sorted[1] > bound) {
        o.require(strict_argmax(after) == strict_argmax(mrn), "mrn argmax changed");
      }
    }
  }

  auto scaled = rows;
  for (auto& r : scaled) r[1] *= 100.0;
  const auto grpo_scaled = grpo_normalize(RewardMatrix::from_rows({"a", "b"}, scaled)).values;
  o.require(strict_argmax(grpo) == 0, "grpo argmax before scaling");
  o.require(strict_argmax(grpo_scaled) == 1, "grpo argmax did not flip");
  if (o.pass) {
    o.detail = "mrn max change " + format_real(std::round(worst_ratio * 1000) / 1000) +
               " of bound; grpo argmax 0 -> 1";
  }
  return o;
}

Outcome judge_replay() {
  Outcome o;
  MockServer server(MockTable::load(kFixtures / "judge_exemplars.json"));
  server.start();
  JudgeConfig cfg;
  cfg.endpoint = server.base_url() + "/v1/chat/completions";
  cfg.model_id = "scripted-judge";
  JudgeReward judge(cfg, std::make_shared<HttpChatService>(cfg), std::make_shared<RewardCache>());
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"2007 Dodge Dakota Club Cab", "2007 Dodge Dakota Club Cab"},
      {"Boeing 707", "707-320"},
      {"Nasturtium", "watercress"}};
  const std::vector<double> expected{1.0, 0.6, 0.0};
  std::string got;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto resp = parse_tagged_response(render_tagged_response("", pairs[i].first));
    double score = -1.0;
    try {
      score = judge(resp, GroundTruth(pairs[i].second));
    } catch (const std::exception& e) {
      o.require(false, e.what());
    }
    o.require(score == expected[i], pairs[i].first + " scored " + format_real(score));
    got += (i ? ", " : "") + format_real(score);
  }
  o.require(server.chat_requests() == 3, "expected 3 requests");
  if (o.pass) o.detail = "{" + got + "}";
  return o;
}

Outcome rule_truth_table() {
  Outcome o;
  const LengthBounds bounds(0, 10);
  struct Case {
    std::string response;
    std::string gt;
    MatchMode mode;
    double format, cls, len;
  };
  const std::string t10(10, 'x');
  const std::string t11(11, 'x');
  const std::vector<Case> cases = {
      {"<think>red tail fin</think> <answer>Boeing 707</answer>", "Boeing 707", MatchMode::kGtInPred, 1, 1, 0},
      {"<think></think> <answer>rose</answer>", "Rose", MatchMode::kGtInPred, 1, 1, 1},
      {"<think>" + t10 + "</think> <answer>rose</answer>", "rose", MatchMode::kGtInPred, 1, 1, 1},
      {"<think>" + t11 + "</think> <answer>rose</answer>", "rose", MatchMode::kGtInPred, 1, 1, 0},
      {"<think>brief</think> <answer>2007 Dodge Dakota Club Cab</answer>", "Dodge Dakota", MatchMode::kGtInPred, 1, 1, 1},
      {"<think>brief</think> <answer>Datura stramonium</answer>", "thorn apple", MatchMode::kEitherDirection, 1, 0, 1},
      {"<think>brief</think> <answer>Dodge</answer>", "Dodge Dakota", MatchMode::kGtInPred, 1, 0, 1},
      {"<think>brief</think> <answer>Dodge</answer>", "Dodge Dakota", MatchMode::kEitherDirection, 1, 1, 1},
      {"<answer>rose</answer>", "rose", MatchMode::kGtInPred, 0, 1, 0},
      {"<think>brief</think>", "rose", MatchMode::kGtInPred, 0, 0, 0},
      {"<answer>rose</answer><think>x</think>", "rose", MatchMode::kGtInPred, 0, 1, 0},
      {"rose", "rose", MatchMode::kGtInPred, 0, 0, 0},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const auto p = parse_tagged_response(c.response);
    const GroundTruth gt(c.gt);
    const double f = format_reward(p);
    const double a = classification_reward(p, gt, c.mode);
    const double l = thinking_length_reward(p, bounds);
    o.require(f == c.format && a == c.cls && l == c.len,
              "case " + std::to_string(i + 1) + " got (" + format_real(f) + "," + format_real(a) + "," +
                  format_real(l) + ")");
  }
  if (o.pass) o.detail = std::to_string(cases.size()) + " cases";
  return o;
}

// Plain objective, written without the library's helpers.
double fd_objective(const std::vector<double>& logits, const std::vector<double>& old_p,
                    const std::vector<double>& ref_p, const std::vector<std::size_t>& ids,
                    const std::vector<double>& adv, double clip, double beta) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) z += (p[j] = std::exp(logits[j] - mx));
  for (double& x : p) x /= z;
  double surr = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double rho = p[ids[i]] / old_p[ids[i]];
    surr += std::min(rho * adv[i], std::clamp(rho, 1.0 - clip, 1.0 + clip) * adv[i]);
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) kl += p[j] * std::log(p[j] / ref_p[j]);
  return surr / static_cast<double>(ids.size()) - beta * kl;
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(1006);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  int clipped_instances = 0;
  int unclipped_samples = 0;
  int instances = 0;
  std::set<double> betas;
  while (instances < 50) {
    std::vector<double> logits(5);
    std::vector<double> old_logits(5);
    std::vector<double> ref_logits(5);
    for (std::size_t j = 0; j < 5; ++j) {
      logits[j] = nd(rng);
      old_logits[j] = logits[j] + 0.4 * nd(rng);
      ref_logits[j] = nd(rng);
    }
    const auto p = softmax(logits);
    const auto old_p = softmax(old_logits);
    const auto ref_p = softmax(ref_logits);
    std::vector<std::size_t> ids(8);
    std::vector<double> adv(8);
    for (std::size_t i = 0; i < 8; ++i) {
      ids[i] = rng() % 5;
      adv[i] = nd(rng);
    }
    const double clip = 0.2;
    const double beta = instances % 2 ? 0.04 : 0.0;
    bool near_kink = false;
    for (std::size_t id : ids) {
      const double rho = p[id] / old_p[id];
      near_kink = near_kink || std::abs(rho - 0.8) < 1e-4 || std::abs(rho - 1.2) < 1e-4;
    }
    if (near_kink) continue;  // the objective is not differentiable there
    ObjectiveInputs in{logits, old_p, ref_p, ids, adv, clip, beta};
    const auto terms = grpo_objective(in);
    if (terms.clip_fraction > 0.0) ++clipped_instances;
    unclipped_samples += static_cast<int>(std::lround((1.0 - terms.clip_fraction) * 8));
    const auto grad = grpo_gradient(in);
    for (std::size_t j = 0; j < 5; ++j) {
      auto up = logits;
      auto down = logits;
      up[j] += h;
      down[j] -= h;
      const double fd = (fd_objective(up, old_p, ref_p, ids, adv, clip, beta) -
                         fd_objective(down, old_p, ref_p, ids, adv, clip, beta)) /
                        (2 * h);
      worst = std::max(worst, std::abs(grad[j] - fd));
    }
    betas.insert(beta);
    ++instances;
  }
  o.require(worst < 1e-5, "max deviation " + format_real(worst));
  o.require(clipped_instances > 0, "no clipped branch exercised");
  o.require(unclipped_samples > 0, "no unclipped branch exercised");
  o.require(betas.size() == 2, "both beta values");
  if (o.pass) {
    o.detail = "max deviation " + format_real(worst) + "; " + std::to_string(clipped_instances) +
               "/50 instances with clipped samples";
  }
  return o;
}

Outcome length_collapse() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto cfg = RunConfig::load(kFixtures / "sim_length.toml");
  const auto env = make_simulation_env(cfg, ModelServices{});
  const auto g = make_grpo_config(cfg);
  o.require(g.steps <= 500, "too many steps");
  o.require(g.group_size == 8 && g.kl_beta == 0.04, "environment settings");
  const auto trace = run_training(env, g);
  const double secs = seconds_since(t0);
  const auto& first = trace.rows.front();
  const auto& last = trace.rows.back();
  const LengthBounds bounds = cfg.bounds;
  double in_bounds = 0.0;
  for (std::size_t j = 0; j < env.templates.size(); ++j) {
    if (bounds.contains(utf8_length(env.templates[j].think_text))) in_bounds += last.probs[j];
  }
  o.require(last.avg_completion_chars < first.avg_completion_chars, "running length did not drop");
  o.require(in_bounds > 0.9, "in-bounds mass " + format_real(in_bounds));
  o.require(secs < 30.0, "took " + format_real(secs) + " s");
  if (o.pass) {
    o.detail = "length " + format_real(std::round(first.avg_completion_chars * 100) / 100) + " -> " +
               format_real(std::round(last.avg_completion_chars * 100) / 100) + ", in-bounds mass " +
               format_real(std::round(in_bounds * 10000) / 10000);
  }
  return o;
}

Outcome stability() {
  Outcome o;
  auto cfg = RunConfig::load(kFixtures / "sim_stability.toml");
  const auto env = make_simulation_env(cfg, ModelServices{});
  auto g = make_grpo_config(cfg);
  const auto names = env.registry.names();
  const std::size_t acc = static_cast<std::size_t>(std::find(names.begin(), names.end(), "cls") - names.begin());
  o.require(acc < names.size(), "no accuracy component");
  if (!o.pass) return o;

  struct Run {
    double accuracy;
    double trailing_std;
    double secs;
  };
  auto run = [&](Strategy s) {
    const auto t0 = Clock::now();
    g.strategy = s;
    const auto trace = run_training(env, g);
    return Run{trace.rows.back().expected_component_mean[acc], trailing_stats(trace, 100).aggregate_std,
               seconds_since(t0)};
  };
  const Run grpo = run(Strategy::kGrpo);
  const Run mrn = run(Strategy::kMrn);
  o.require(mrn.accuracy > grpo.accuracy,
            "accuracy mrn " + format_real(mrn.accuracy) + " vs grpo " + format_real(grpo.accuracy));
  o.require(mrn.trailing_std < grpo.trailing_std,
            "trailing std mrn " + format_real(mrn.trailing_std) + " vs grpo " + format_real(grpo.trailing_std));
  o.require(grpo.secs < 60.0 && mrn.secs < 60.0, "too slow");
  if (o.pass) {
    auto r4 = [](double x) { return format_real(std::round(x * 10000) / 10000); };
    o.detail = "accuracy " + r4(mrn.accuracy) + " vs " + r4(grpo.accuracy) + ", trailing std " +
               r4(mrn.trailing_std) + " vs " + r4(grpo.trailing_std);
  }
  return o;
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> rows;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

Outcome pipeline_determinism() {
  Outcome o;
  const fs::path dir = scratch_dir("score");
  const std::string log = (kFixtures / "rollouts_50.jsonl").string();
  const std::string cfg = (kFixtures / "rule_only.toml").string();
  std::vector<std::string> outputs;
  int runs = 0;
  for (const char* par : {"1", "8"}) {
    for (int i = 0; i < 5; ++i) {
      const fs::path out = dir / ("run" + std::to_string(runs++));
      const int code = run_cli({"score", log, "--config", cfg, "--parallelism", par, "--out", out.string()},
                               dir / "stdout.txt");
      o.require(code == 0, "score exited " + std::to_string(code));
      outputs.push_back(read_file(out / "scored.jsonl"));
    }
  }
  o.require(!outputs.front().empty(), "empty scored output");
  for (const auto& s : outputs) o.require(s == outputs.front(), "scored output differs between runs");

  const auto rows = read_jsonl(dir / "run0" / "scored.jsonl");
  o.require(rows.size() == 50, "expected 50 scored groups, got " + std::to_string(rows.size()));
  std::istringstream csv(read_file(dir / "run0" / "aggregate.csv"));
  std::string line;
  std::getline(csv, line);
  double worst = 0.0;
  for (const auto& r : rows) {
    if (!std::getline(csv, line)) {
      o.require(false, "aggregate.csv is short");
      break;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    const auto& rewards = r["rewards"];
    const std::size_t k_count = r["components"].size();
    o.require(cells.size() == 1 + 2 * k_count + 3, "unexpected csv width");
    if (cells.size() != 1 + 2 * k_count + 3) break;
    double agg_mean = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      double mean = 0.0;
      for (const auto& row : rewards) mean += row[k].get<double>();
      mean /= static_cast<double>(rewards.size());
      agg_mean += mean;
      worst = std::max(worst, std::abs(std::stod(cells[1 + 2 * k]) - mean));
    }
    worst = std::max(worst, std::abs(std::stod(cells[1 + 2 * k_count]) - agg_mean));
  }
  o.require(worst <= 1e-12, "csv mean deviation " + format_real(worst));
  fs::remove_all(dir);
  if (o.pass) o.detail = "10 identical runs; csv mean deviation " + format_real(worst);
  return o;
}

Outcome simulator_reproducibility() {
  Outcome o;
  const fs::path dir = scratch_dir("sim");
  const std::string cfg = (kFixtures / "sim_length.toml").string();
  for (const char* name : {"a", "b"}) {
    const int code = run_cli({"simulate", "--config", cfg, "--out", (dir / name).string()}, dir / "stdout.txt");
    o.require(code == 0, "simulate exited " + std::to_string(code));
  }
  const auto trace_a = read_file(dir / "a" / "trace.csv");
  o.require(!trace_a.empty(), "empty trace");
  o.require(trace_a == read_file(dir / "b" / "trace.csv"), "trace.csv differs");
  o.require(read_file(dir / "a" / "summary.json") == read_file(dir / "b" / "summary.json"), "summary differs");

  // Frozen reference trace: identical bytes on any machine with IEEE doubles
  // and the same libm.
  const int code = run_cli({"simulate", "--config", cfg, "--steps", "50", "--out", (dir / "short").string()},
                           dir / "stdout.txt");
  o.require(code == 0, "simulate exited " + std::to_string(code));
  o.require(read_file(dir / "short" / "trace.csv") == read_file(kFixtures / "golden_trace_length_50.csv"),
            "trace differs from the committed reference");
  fs::remove_all(dir);
  if (o.pass) o.detail = "byte-identical traces, matches committed reference";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 mrn standardization", mrn_standardization},
      {"2 single-component equivalence", single_component_equivalence},
      {"3 affine robustness", affine_robustness},
      {"4 judge exemplar replay", judge_replay},
      {"5 rule reward truth table", rule_truth_table},
      {"6 gradient vs finite differences", gradient_check},
      {"7 directed length collapse", length_collapse},
      {"8 mrn stability vs grpo", stability},
      {"9 pipeline determinism", pipeline_determinism},
      {"10 simulator reproducibility", simulator_reproducibility},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << (o.detail.empty() ? "" : " (" + o.detail + ")")
              << std::endl;
  }
  return failures;
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rewardkit/advantage.hpp"
#include "rewardkit/config.hpp"
#include "rewardkit/ensemble.hpp"
#include "rewardkit/errors.hpp"
#include "rewardkit/model_rewards.hpp"
#include "rewardkit/pipeline.hpp"
#include "rewardkit/policy_sim.hpp"
#include "rewardkit/prompts.hpp"
#include "rewardkit/response.hpp"
#include "rewardkit/rule_rewards.hpp"

namespace py = pybind11;
using namespace rewardkit;

namespace {

py::dict advantage_dict(const AdvantageVector& a, std::size_t k_count) {
  py::dict d;
  d["strategy"] = std::string(to_string(a.strategy));
  d["values"] = a.values;
  if (a.per_component) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i * k_count < a.per_component->size(); ++i) {
      rows.emplace_back(a.per_component->begin() + static_cast<long>(i * k_count),
                        a.per_component->begin() + static_cast<long>((i + 1) * k_count));
    }
    d["per_component"] = rows;
  } else {
    d["per_component"] = py::none();
  }
  return d;
}

RewardMatrix matrix_from(const std::vector<std::vector<double>>& rows, std::vector<std::string> names) {
  if (names.empty() && !rows.empty()) {
    for (std::size_t k = 0; k < rows.front().size(); ++k) names.push_back("r" + std::to_string(k));
  }
  return RewardMatrix::from_rows(std::move(names), rows);
}

NormalizationConfig norm_from(double epsilon, std::vector<double> weights) {
  NormalizationConfig n;
  n.epsilon = epsilon;
  n.weights = std::move(weights);
  return n;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reward ensemble scoring and group advantage normalization";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ScoringError>(m, "ScoringError", PyExc_RuntimeError);

  py::class_<ParsedResponse>(m, "ParsedResponse")
      .def_readonly("raw", &ParsedResponse::raw)
      .def_readonly("think", &ParsedResponse::think)
      .def_readonly("answer", &ParsedResponse::answer)
      .def_readonly("format_valid", &ParsedResponse::format_valid)
      .def_readonly("think_length", &ParsedResponse::think_length)
      .def("__repr__", [](const ParsedResponse& p) {
        return "ParsedResponse(format_valid=" + std::string(p.format_valid ? "True" : "False") +
               ", think_length=" + std::to_string(p.think_length) + ")";
      });

  m.def("parse_tagged_response", &parse_tagged_response, py::arg("text"));
  m.def("render_tagged_response", &render_tagged_response, py::arg("think"), py::arg("answer"));
  m.def("normalize_label", [](std::string_view s) { return normalize_label(s).text(); }, py::arg("text"));
  m.def(
      "substring_match",
      [](std::string_view pred, std::string_view gt, std::string_view mode) {
        return substring_match(pred, gt, parse_match_mode(mode));
      },
      py::arg("pred"), py::arg("gt"), py::arg("mode") = "gt_in_pred");

  m.def("format_reward", [](std::string_view text) { return format_reward(parse_tagged_response(text)); },
        py::arg("response"));
  m.def(
      "classification_reward",
      [](std::string_view text, const std::string& gt, std::string_view mode) {
        return classification_reward(parse_tagged_response(text), GroundTruth(gt), parse_match_mode(mode));
      },
      py::arg("response"), py::arg("ground_truth"), py::arg("mode") = "gt_in_pred");
  m.def(
      "thinking_length_reward",
      [](std::string_view text, std::size_t l_min, std::size_t l_max) {
        return thinking_length_reward(parse_tagged_response(text), LengthBounds(l_min, l_max));
      },
      py::arg("response"), py::arg("l_min") = kDefaultLengthMin, py::arg("l_max") = kDefaultLengthMax);

  m.def(
      "score_group",
      [](const std::vector<std::string>& completions, const std::string& gt, std::size_t l_min,
         std::size_t l_max) {
        const auto mat = score_group(completions, GroundTruth(gt), make_rule_registry(LengthBounds(l_min, l_max)));
        py::dict d;
        d["components"] = mat.components();
        d["rows"] = mat.rows();
        return d;
      },
      py::arg("completions"), py::arg("ground_truth"), py::arg("l_min") = kDefaultLengthMin,
      py::arg("l_max") = kDefaultLengthMax);

  m.def(
      "normalize",
      [](const std::vector<std::vector<double>>& rows, std::string_view strategy, double epsilon,
         std::vector<double> weights) {
        const auto mat = matrix_from(rows, {});
        return advantage_dict(normalize(mat, parse_strategy(strategy), norm_from(epsilon, std::move(weights))),
                              mat.num_components());
      },
      py::arg("rows"), py::arg("strategy") = "mrn", py::arg("epsilon") = NormalizationConfig{}.epsilon,
      py::arg("weights") = std::vector<double>{});

  m.def(
      "advantage_diagnostics",
      [](const std::vector<std::vector<double>>& rows, std::vector<std::string> names, double epsilon) {
        const auto mat = matrix_from(rows, std::move(names));
        return diagnostics_json(advantage_diagnostics(mat, norm_from(epsilon, {}))).dump();
      },
      py::arg("rows"), py::arg("components") = std::vector<std::string>{},
      py::arg("epsilon") = NormalizationConfig{}.epsilon);

  m.def(
      "render_prompt",
      [](std::string_view kind, const std::map<std::string, std::string>& bindings) {
        PromptBindings b(bindings.begin(), bindings.end());
        return render_prompt(PromptTemplate::bundled(parse_prompt_kind(kind)), b);
      },
      py::arg("kind"), py::arg("bindings"));

  m.def("parse_judge_score", [](std::string_view reply) { return parse_judge_score(reply, JudgeConfig{}); },
        py::arg("reply"));
  m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));
  m.def("evaluate_accuracy", &evaluate_accuracy, py::arg("pairs"));

  m.def(
      "simulate",
      [](const std::string& config_toml, py::object strategy, py::object steps, py::object seed) {
        RunConfig cfg = RunConfig::parse(config_toml);
        if (!strategy.is_none()) cfg.strategy = parse_strategy(strategy.cast<std::string>());
        if (!steps.is_none()) cfg.simulation.steps = steps.cast<std::size_t>();
        if (!seed.is_none()) cfg.seed = seed.cast<std::uint64_t>();
        cfg.validate();
        const ModelServices services = make_model_services(cfg);
        const auto env = make_simulation_env(cfg, services);
        const auto g = make_grpo_config(cfg);
        TrainingTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_training(env, g);
        }
        py::dict d;
        d["summary"] = trace_summary(trace, g).dump();
        d["trace_csv"] = trace_csv(trace);
        return d;
      },
      py::arg("config_toml"), py::arg("strategy") = py::none(), py::arg("steps") = py::none(),
      py::arg("seed") = py::none());
}

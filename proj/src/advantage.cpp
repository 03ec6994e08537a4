#include "rewardkit/advantage.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "rewardkit/errors.hpp"

namespace rewardkit {

RewardMatrix::RewardMatrix(std::vector<std::string> components, std::size_t group_size,
                           std::vector<double> values)
    : components_(std::move(components)), group_size_(group_size), values_(std::move(values)) {
  if (group_size_ < 2) throw ValidationError("reward matrix needs a group of at least 2 rows");
  if (components_.empty()) throw ValidationError("reward matrix needs at least one component");
  std::set<std::string> seen;
  for (const auto& name : components_) {
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate reward component name '" + name + "'");
    }
  }
  if (values_.size() != group_size_ * components_.size()) {
    throw ValidationError("reward matrix has " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(group_size_) + "x" +
                          std::to_string(components_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("reward matrix contains a non-finite value");
  }
}

RewardMatrix RewardMatrix::from_rows(std::vector<std::string> components,
                                     const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  flat.reserve(rows.size() * components.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != components.size()) {
      throw ValidationError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                            " values, expected " + std::to_string(components.size()));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return RewardMatrix(std::move(components), rows.size(), std::move(flat));
}

std::vector<double> RewardMatrix::column(std::size_t k) const {
  std::vector<double> out(group_size_);
  for (std::size_t i = 0; i < group_size_; ++i) out[i] = (*this)(i, k);
  return out;
}

std::vector<std::vector<double>> RewardMatrix::rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(group_size_);
  for (std::size_t i = 0; i < group_size_; ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

Strategy parse_strategy(std::string_view name) {
  if (name == "grpo") return Strategy::kGrpo;
  if (name == "mrn") return Strategy::kMrn;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected grpo or mrn)");
}

std::string_view to_string(Strategy s) { return s == Strategy::kGrpo ? "grpo" : "mrn"; }

void NormalizationConfig::validate(std::size_t num_components) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("normalization epsilon must be a finite positive number");
  }
  if (!weights.empty() && weights.size() != num_components) {
    throw ConfigError("normalization weights have " + std::to_string(weights.size()) +
                      " entries for " + std::to_string(num_components) + " components");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("normalization weights must be finite");
  }
}

GroupStats group_stats(std::span<const double> xs) {
  GroupStats s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  const double pivot = xs.front();
  double shifted = 0.0;
  for (double x : xs) shifted += x - pivot;
  s.mean = pivot + shifted / n;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / n);
  return s;
}

namespace {

void standardize(std::span<const double> xs, double epsilon, std::span<double> out) {
  const GroupStats s = group_stats(xs);
  const double denom = s.std + epsilon;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - s.mean) / denom;
}

double weight(const NormalizationConfig& cfg, std::size_t k) {
  return cfg.weights.empty() ? 1.0 : cfg.weights[k];
}

}  // namespace

std::vector<double> aggregate_rewards(const RewardMatrix& m, const NormalizationConfig& cfg) {
  std::vector<double> agg(m.group_size(), 0.0);
  for (std::size_t i = 0; i < m.group_size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < m.num_components(); ++k) {
      sum += cfg.weights.empty() ? m(i, k) : cfg.weights[k] * m(i, k);
    }
    agg[i] = sum;
  }
  return agg;
}

AdvantageVector grpo_normalize(const RewardMatrix& m, const NormalizationConfig& cfg) {
  cfg.validate(m.num_components());
  const auto agg = aggregate_rewards(m, cfg);
  AdvantageVector out;
  out.strategy = Strategy::kGrpo;
  out.values.resize(agg.size());
  standardize(agg, cfg.epsilon, out.values);
  return out;
}

AdvantageVector mrn_normalize(const RewardMatrix& m, const NormalizationConfig& cfg) {
  cfg.validate(m.num_components());
  const std::size_t g = m.group_size();
  const std::size_t k_count = m.num_components();
  std::vector<double> per(g * k_count);
  std::vector<double> z(g);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto col = m.column(k);
    standardize(col, cfg.epsilon, z);
    const double w = weight(cfg, k);
    for (std::size_t i = 0; i < g; ++i) {
      per[i * k_count + k] = cfg.weights.empty() ? z[i] : w * z[i];
    }
  }
  AdvantageVector out;
  out.strategy = Strategy::kMrn;
  out.values.assign(g, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) sum += per[i * k_count + k];
    out.values[i] = sum;
  }
  out.per_component = std::move(per);
  return out;
}

AdvantageVector normalize(const RewardMatrix& m, Strategy strategy,
                          const NormalizationConfig& cfg) {
  return strategy == Strategy::kGrpo ? grpo_normalize(m, cfg) : mrn_normalize(m, cfg);
}

std::optional<double> pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) return std::nullopt;
  const GroupStats sa = group_stats(a);
  const GroupStats sb = group_stats(b);
  if (sa.std == 0.0 || sb.std == 0.0) return std::nullopt;
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - sa.mean) * (b[i] - sb.mean);
  cov /= static_cast<double>(a.size());
  const double r = cov / (sa.std * sb.std);
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

AdvantageDiagnostics advantage_diagnostics(const RewardMatrix& m, const NormalizationConfig& cfg) {
  AdvantageDiagnostics d;
  d.components = m.components();
  d.grpo = grpo_normalize(m, cfg);
  d.mrn = mrn_normalize(m, cfg);
  d.aggregate_stats = group_stats(aggregate_rewards(m, cfg));
  for (std::size_t k = 0; k < m.num_components(); ++k) {
    const auto col = m.column(k);
    const GroupStats s = group_stats(col);
    d.component_stats.push_back(s);
    if (s.std == 0.0) {
      d.grpo_correlation.emplace_back(std::nullopt);
      d.mrn_correlation.emplace_back(std::nullopt);
      continue;
    }
    std::vector<double> z(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) z[i] = (col[i] - s.mean) / s.std;
    d.grpo_correlation.push_back(pearson_correlation(d.grpo.values, z));
    d.mrn_correlation.push_back(pearson_correlation(d.mrn.values, z));
  }
  return d;
}

}  // namespace rewardkit

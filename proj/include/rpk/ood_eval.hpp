// Copyright 2026 The rpk Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rpk/errors.hpp"
#include "rpk/numerics/tensor.hpp"

namespace rpk {

// Max softmax probability of a logit vector.
inline double msp_score(std::span<const double> logits) {
  if (logits.size() < 2) throw ConfigError("msp_score: need at least 2 classes");
  double mx = -INFINITY;
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("msp_score: non-finite logit");
    mx = std::max(mx, v);
  }
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return 1.0 / z;
}

inline std::vector<double> msp_scores(const Tensor& logits) {
  std::vector<double> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = msp_score(logits.row(i));
  return out;
}

enum class Detection { kIn, kOut };

// h(x) = in iff S(x) >= gamma.
inline Detection detect(double score, double threshold) {
  if (!std::isfinite(score) || !std::isfinite(threshold)) throw NumericError("detect: non-finite input");
  return score >= threshold ? Detection::kIn : Detection::kOut;
}

struct DetectionScores {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
};

namespace eval_detail {

inline void check_scores(const DetectionScores& s, const char* op) {
  if (s.id_scores.empty() || s.ood_scores.empty()) throw ConfigError(std::string(op) + ": empty score array");
  for (const auto* v : {&s.id_scores, &s.ood_scores})
    for (double x : *v)
      if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite score");
}

}  // namespace eval_detail

inline constexpr std::size_t kMinIdScoresForFpr95 = 20;

// Threshold accepting at least 95% of ID scores: the largest gamma with
// #{id >= gamma} >= ceil(0.95 n), i.e. the lower-interpolated 5th percentile.
inline double tpr95_threshold(std::vector<double> id_scores) {
  std::sort(id_scores.begin(), id_scores.end());
  const std::size_t n = id_scores.size();
  const std::size_t required = (95 * n + 99) / 100;
  return id_scores[n - required];
}

// Fraction of OOD scores accepted at the 95%-TPR threshold.
inline double fpr_at_95_tpr(const DetectionScores& s) {
  eval_detail::check_scores(s, "fpr_at_95_tpr");
  if (s.id_scores.size() < kMinIdScoresForFpr95) {
    throw ConfigError("fpr_at_95_tpr: need at least 20 ID scores, got " + std::to_string(s.id_scores.size()));
  }
  const double gamma = tpr95_threshold(s.id_scores);
  const auto accepted = std::count_if(s.ood_scores.begin(), s.ood_scores.end(), [gamma](double v) { return v >= gamma; });
  return static_cast<double>(accepted) / static_cast<double>(s.ood_scores.size());
}

// P(id > ood) + 0.5 P(id == ood) from midranks of the pooled scores.
inline double auroc(const DetectionScores& s) {
  eval_detail::check_scores(s, "auroc");
  const std::size_t n1 = s.id_scores.size(), n2 = s.ood_scores.size();
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(n1 + n2);
  for (double v : s.id_scores) pooled.emplace_back(v, true);
  for (double v : s.ood_scores) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Ranks are 1-based; doubled so tied midranks stay integral.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const std::uint64_t twice_mid = (i + 1) + j;  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (pooled[t].second) twice_rank_sum += twice_mid;
    i = j;
  }
  const double u = (static_cast<double>(twice_rank_sum) - static_cast<double>(n1) * static_cast<double>(n1 + 1)) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n2));
}

inline double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ConfigError("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

enum class MetricKind { kAccuracy, kFpr95, kAuroc };

inline std::string_view metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::kAccuracy: return "accuracy";
    case MetricKind::kFpr95: return "fpr95";
    case MetricKind::kAuroc: return "auroc";
  }
  return "unknown";
}

struct Metric {
  std::string benchmark;
  MetricKind kind;
  double value;
};

// Goodness in [0,1]: accuracy and AUROC as-is, 1 - FPR95.
inline double normalized_goodness(const Metric& m) { return m.kind == MetricKind::kFpr95 ? 1.0 - m.value : m.value; }

inline constexpr std::string_view kAggregateConvention =
    "aggregate = unweighted mean over all benchmark metrics of accuracy, auroc and (1 - fpr95), raw values";

inline double aggregate_score(std::span<const Metric> metrics) {
  bool seen[3] = {false, false, false};
  double total = 0.0;
  for (const auto& m : metrics) {
    seen[static_cast<int>(m.kind)] = true;
    total += normalized_goodness(m);
  }
  std::string missing;
  for (int k = 0; k < 3; ++k) {
    if (!seen[k]) missing += (missing.empty() ? "" : ", ") + std::string(metric_name(static_cast<MetricKind>(k)));
  }
  if (!missing.empty()) throw ConfigError("aggregate_score: missing metric families: " + missing);
  return total / static_cast<double>(metrics.size());
}

struct SemanticResult {
  std::string benchmark;
  double fpr95 = 0;
  double auroc = 0;
};

struct EvalReport {
  std::string method;
  std::string id_benchmark = "id-test";
  double id_accuracy = 0;
  std::vector<std::pair<std::string, double>> covariate;  // benchmark -> accuracy
  std::vector<SemanticResult> semantic;
  double aggregate = 0;
  std::map<std::string, double> extra;  // e.g. alpha

  std::vector<Metric> metrics() const {
    std::vector<Metric> out{{id_benchmark, MetricKind::kAccuracy, id_accuracy}};
    for (const auto& [name, acc] : covariate) out.push_back({name, MetricKind::kAccuracy, acc});
    for (const auto& s : semantic) {
      out.push_back({s.benchmark, MetricKind::kFpr95, s.fpr95});
      out.push_back({s.benchmark, MetricKind::kAuroc, s.auroc});
    }
    return out;
  }

  double covariate_mean() const {
    if (covariate.empty()) return 0.0;
    double t = 0;
    for (const auto& [_, a] : covariate) t += a;
    return t / static_cast<double>(covariate.size());
  }

  void finalize() { aggregate = aggregate_score(metrics()); }
};

inline constexpr std::string_view kReportCsvHeader = "method,benchmark,metric,value";

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// One row per (method, benchmark, metric); the aggregate is the row with
// benchmark "all" and metric "aggregate".
inline std::string report_csv(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << kReportCsvHeader << "\n";
  for (const auto& r : reports) {
    for (const auto& m : r.metrics()) {
      os << r.method << "," << m.benchmark << "," << metric_name(m.kind) << "," << format_value(m.value) << "\n";
    }
    os << r.method << ",all,aggregate," << format_value(r.aggregate) << "\n";
  }
  return os.str();
}

inline nlohmann::json report_json(std::span<const EvalReport> reports) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& r : reports) {
    nlohmann::json cov = nlohmann::json::object();
    for (const auto& [name, acc] : r.covariate) cov[name] = acc;
    nlohmann::json sem = nlohmann::json::object();
    for (const auto& s : r.semantic) sem[s.benchmark] = {{"fpr95", s.fpr95}, {"auroc", s.auroc}};
    nlohmann::json entry{{"id_accuracy", r.id_accuracy}, {"covariate", cov}, {"semantic", sem}, {"aggregate", r.aggregate}};
    for (const auto& [k, v] : r.extra) entry[k] = v;
    methods[r.method] = entry;
  }
  return nlohmann::json{{"aggregate_convention", kAggregateConvention}, {"methods", methods}};
}

}  // namespace rpk

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
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rpk/datagen.hpp"
#include "rpk/errors.hpp"
#include "rpk/inference.hpp"
#include "rpk/ood_eval.hpp"
#include "rpk/training.hpp"

namespace rpk {

enum class Method { kZeroShot, kLinearProbe, kReprogrammer, kResidual };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kZeroShot: return "zs";
    case Method::kLinearProbe: return "lp";
    case Method::kReprogrammer: return "rp";
    case Method::kResidual: return "rrp";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "zs") return Method::kZeroShot;
  if (s == "lp") return Method::kLinearProbe;
  if (s == "rp") return Method::kReprogrammer;
  if (s == "rrp") return Method::kResidual;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected zs, lp, rp or rrp)");
}

struct Benchmark {
  std::string name;
  LabeledDataset data;
};

struct BenchmarkSuite {
  LabeledDataset id_train;
  LabeledDataset id_test;
  std::vector<Benchmark> covariate;
  std::vector<Benchmark> semantic;

  void validate() const {
    if (id_test.split != Split::kIdTest) throw ConfigError("suite: id-test split has tag " + std::string(split_name(id_test.split)));
    if (id_test.size() == 0) throw ConfigError("suite: empty id-test split");
    for (const auto& b : covariate) {
      if (b.data.split != Split::kCovariateOod) throw ConfigError("suite: " + b.name + " is not a covariate-ood split");
      if (b.data.class_names != id_test.class_names) throw ConfigError("suite: " + b.name + " class names differ from ID");
    }
    for (const auto& b : semantic) {
      if (b.data.split != Split::kSemanticOod) throw ConfigError("suite: " + b.name + " is not a semantic-ood split");
    }
  }
};

struct SuiteFeatures {
  ClassBank bank;
  std::optional<ImageFeatures> id_train;  // only needed by the linear probe
  ImageFeatures id_test;
  std::vector<ImageFeatures> covariate;
  std::vector<ImageFeatures> semantic;
};

inline SuiteFeatures compute_features(const TrainedModel& model, const BenchmarkSuite& suite, bool with_train) {
  suite.validate();
  if (suite.id_test.class_names != model.class_names) throw ConfigError("suite class names differ from the model's");
  SuiteFeatures out;
  out.bank = build_class_bank(model);
  if (with_train) {
    if (suite.id_train.size() == 0) throw ConfigError("linear probe needs a non-empty id-train split");
    out.id_train = image_features(model, suite.id_train);
  }
  out.id_test = image_features(model, suite.id_test);
  for (const auto& b : suite.covariate) out.covariate.push_back(image_features(model, b.data));
  for (const auto& b : suite.semantic) out.semantic.push_back(image_features(model, b.data));
  return out;
}

struct EvalOptions {
  double alpha = 0.4;
  LinearProbeConfig probe;
};

// Scores one method given precomputed features. `probe` is required for lp.
inline Tensor method_logits(Method method, const ImageFeatures& f, const ClassBank& bank, double alpha,
                            double temperature, const LinearClassifier* probe) {
  switch (method) {
    case Method::kZeroShot: return zero_shot_logits(f, bank, temperature);
    case Method::kReprogrammer: return reprogrammer_logits(f, bank, temperature);
    case Method::kResidual: return residual_logits(f, bank, alpha, temperature);
    case Method::kLinearProbe:
      if (!probe) throw ConfigError("lp logits need a fitted probe");
      return probe->logits(f.zero_shot);
  }
  throw ConfigError("unknown method");
}

inline LinearClassifier fit_probe(const SuiteFeatures& feats, const BenchmarkSuite& suite, const LinearProbeConfig& cfg) {
  if (!feats.id_train) throw ConfigError("fit_probe: id-train features were not computed");
  return linear_probe_fit(feats.id_train->zero_shot, suite.id_train.labels, suite.id_train.class_names.size(), cfg);
}

inline EvalReport evaluate(Method method, const SuiteFeatures& feats, const BenchmarkSuite& suite, double alpha,
                           double temperature, const LinearClassifier* probe) {
  EvalReport r;
  r.method = std::string(method_name(method));
  if (method == Method::kResidual) r.extra["alpha"] = alpha;
  const Tensor id_logits = method_logits(method, feats.id_test, feats.bank, alpha, temperature, probe);
  r.id_accuracy = accuracy(predictions(id_logits), suite.id_test.labels);
  for (std::size_t i = 0; i < suite.covariate.size(); ++i) {
    const Tensor l = method_logits(method, feats.covariate[i], feats.bank, alpha, temperature, probe);
    r.covariate.emplace_back(suite.covariate[i].name, accuracy(predictions(l), suite.covariate[i].data.labels));
  }
  const std::vector<double> id_scores = msp_scores(id_logits);
  for (std::size_t i = 0; i < suite.semantic.size(); ++i) {
    const Tensor l = method_logits(method, feats.semantic[i], feats.bank, alpha, temperature, probe);
    const DetectionScores s{id_scores, msp_scores(l)};
    r.semantic.push_back({suite.semantic[i].name, fpr_at_95_tpr(s), auroc(s)});
  }
  r.finalize();
  return r;
}

inline std::vector<EvalReport> evaluate_methods(const TrainedModel& model, const BenchmarkSuite& suite,
                                                std::span<const Method> methods, const EvalOptions& options = {}) {
  const bool need_probe = std::find(methods.begin(), methods.end(), Method::kLinearProbe) != methods.end();
  const SuiteFeatures feats = compute_features(model, suite, need_probe);
  std::optional<LinearClassifier> probe;
  if (need_probe) probe = fit_probe(feats, suite, options.probe);
  std::vector<EvalReport> out;
  for (Method m : methods) {
    out.push_back(evaluate(m, feats, suite, options.alpha, model.config.temperature, probe ? &*probe : nullptr));
  }
  return out;
}

// alpha in {0.0, 0.1, ..., 1.0}.
inline std::vector<double> alpha_grid() {
  std::vector<double> a;
  for (int i = 0; i <= 10; ++i) a.push_back(i / 10.0);
  return a;
}

inline std::vector<EvalReport> alpha_sweep(const SuiteFeatures& feats, const BenchmarkSuite& suite, double temperature,
                                           std::span<const double> alphas) {
  std::vector<EvalReport> out;
  for (double a : alphas) out.push_back(evaluate(Method::kResidual, feats, suite, a, temperature, nullptr));
  return out;
}

// Alpha with the best ID-test accuracy; the smallest such alpha on ties.
inline double select_alpha(std::span<const EvalReport> sweep) {
  if (sweep.empty()) throw ConfigError("select_alpha: empty sweep");
  const EvalReport* best = &sweep[0];
  for (const auto& r : sweep)
    if (r.id_accuracy > best->id_accuracy) best = &r;
  return best->extra.at("alpha");
}

struct PadRow {
  std::size_t pad = 0;
  bool valid = false;
  std::string warning;
  double id_acc = 0, cov_acc = 0, fpr95 = 0, auroc = 0, aggregate = 0;
};

inline constexpr std::string_view kPadCsvHeader = "pad,id_acc,cov_acc,fpr95,auroc,aggregate,warning";

inline PadRow pad_row(std::size_t pad, const EvalReport& r) {
  PadRow row;
  row.pad = pad;
  row.valid = true;
  row.id_acc = r.id_accuracy;
  row.cov_acc = r.covariate_mean();
  for (const auto& s : r.semantic) {
    row.fpr95 += s.fpr95;
    row.auroc += s.auroc;
  }
  if (!r.semantic.empty()) {
    row.fpr95 /= static_cast<double>(r.semantic.size());
    row.auroc /= static_cast<double>(r.semantic.size());
  }
  row.aggregate = r.aggregate;
  return row;
}

// Config for one sweep point: encoder side fixed, inner region d - 2*pad,
// only the image border trained.
inline TrainConfig pad_config(const TrainConfig& base, std::size_t d, std::size_t pad) {
  TrainConfig c = base;
  c.pad = pad;
  c.upsample_side = d - 2 * pad;
  c.train_text = false;
  return c;
}

inline std::string pad_invalid_reason(std::size_t d, std::size_t s, std::size_t pad) {
  if (2 * pad >= d) return "2*pad >= d=" + std::to_string(d);
  if (d - 2 * pad < s) return "inner side " + std::to_string(d - 2 * pad) + " < image side " + std::to_string(s);
  return {};
}

inline std::size_t thread_cap(std::size_t requested) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, requested == 0 ? hw : requested);
}

// Trains and evaluates one model per pad. Rows come back in input order
// whatever the thread count.
inline std::vector<PadRow> sweep_padding(const BenchmarkSuite& suite, std::shared_ptr<const EncoderPair> encoders,
                                         const TrainConfig& base, std::span<const std::size_t> pads,
                                         std::size_t threads = 1) {
  suite.validate();
  const std::size_t d = encoders->side(), s = suite.id_test.side;
  std::vector<PadRow> rows(pads.size());
  std::vector<std::exception_ptr> errors(pads.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pads.size();) {
      try {
        const std::size_t pad = pads[i];
        if (auto why = pad_invalid_reason(d, s, pad); !why.empty()) {
          rows[i].pad = pad;
          rows[i].warning = "skipped pad " + std::to_string(pad) + ": " + why;
          continue;
        }
        const TrainedModel model = fit(suite.id_train, encoders, pad_config(base, d, pad));
        const Method rp = Method::kReprogrammer;
        rows[i] = pad_row(pad, evaluate_methods(model, suite, std::span(&rp, 1)).front());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(thread_cap(threads), std::max<std::size_t>(1, pads.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

inline std::string pad_csv(std::span<const PadRow> rows) {
  std::ostringstream os;
  os << kPadCsvHeader << "\n";
  for (const auto& r : rows) {
    if (!r.valid) {
      os << r.pad << ",,,,,," << r.warning << "\n";
      continue;
    }
    os << r.pad << "," << format_value(r.id_acc) << "," << format_value(r.cov_acc) << "," << format_value(r.fpr95)
       << "," << format_value(r.auroc) << "," << format_value(r.aggregate) << ",\n";
  }
  return os.str();
}

}  // namespace rpk

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
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rpk/datagen.hpp"
#include "rpk/encoders.hpp"
#include "rpk/errors.hpp"
#include "rpk/image_reprogram.hpp"
#include "rpk/numerics/ops.hpp"
#include "rpk/text_reprogram.hpp"

namespace rpk {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::size_t warmup_steps = 50;
  double temperature = 100.0;
  std::uint64_t seed = 0;
  std::size_t pad = 8;
  std::size_t upsample_side = 48;  // inner image region; encoder side d = upsample_side + 2 * pad
  double momentum = 0.0;
  bool train_image = true;
  bool train_text = true;
  ImageInit image_init = ImageInit::kZeros;
  std::size_t vocab_size = 0;  // pad the vocabulary to at least this many tokens
  double text_init_stddev = 0.02;

  std::size_t side() const { return upsample_side + 2 * pad; }

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be finite and > 0");
    if (batch_size == 0) throw ConfigError("batch_size must be > 0");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be finite and > 0");
    if (upsample_side == 0) throw ConfigError("upsample_side must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(text_init_stddev >= 0.0) || !std::isfinite(text_init_stddev)) throw ConfigError("text_init_stddev must be >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Linear ramp 0 -> base over `warmup` steps, then half-cosine down to 0 at `total`.
struct CosineWarmupSchedule {
  double base_lr;
  std::size_t warmup;
  std::size_t total;

  double lr_at(std::size_t step) const {
    if (step > total) throw ConfigError("lr_at: step " + std::to_string(step) + " beyond total " + std::to_string(total));
    if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (total == warmup) return 0.0;  // no decay phase: the end of the schedule wins
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  }
};

inline std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size) { return (n + batch_size - 1) / batch_size; }

inline double lr_at(std::size_t step, const TrainConfig& config, std::size_t total_steps) {
  return CosineWarmupSchedule{config.learning_rate, config.warmup_steps, total_steps}.lr_at(step);
}

// CLIP-style symmetric contrastive loss over matched rows of two [b,k]
// feature matrices: logits = tau * norm(img) norm(txt)^T with diagonal targets.
inline ad::Var symmetric_ce_loss(const ad::Var& image_features, const ad::Var& text_features, double temperature) {
  require_same_shape(image_features.value(), text_features.value(), "symmetric_ce_loss");
  if (image_features.value().rank() != 2 || image_features.value().dim(0) == 0) {
    throw ShapeError("symmetric_ce_loss: expected non-empty [b,k] features, got " + to_string(image_features.shape()));
  }
  const std::size_t b = image_features.value().dim(0);
  std::vector<std::size_t> targets(b);
  std::iota(targets.begin(), targets.end(), std::size_t{0});
  ad::Var logits = ad::scale(
      ad::matmul(ad::l2_normalize_rows(image_features), ad::transpose(ad::l2_normalize_rows(text_features))), temperature);
  ad::Var per_image = ad::softmax_cross_entropy(logits, targets);
  ad::Var per_text = ad::softmax_cross_entropy(ad::transpose(logits), targets);
  return ad::scale(ad::add(per_image, per_text), 0.5);
}

inline double symmetric_ce_loss(const Tensor& image_features, const Tensor& text_features, double temperature) {
  ad::Tape tape;
  return symmetric_ce_loss(tape.constant(image_features), tape.constant(text_features), temperature).value().item();
}

// Reprogramming parameters (W, theta, b) bound to a frozen encoder pair.
struct TrainedModel {
  std::shared_ptr<const EncoderPair> encoders;
  ImageReprogrammer image;
  TextReprogrammer text;
  // Phi at initialisation; the zero-shot text path embeds captions with it.
  TextReprogrammer zero_shot_text;
  std::vector<std::string> class_names;
  TrainConfig config;
  std::vector<double> loss_history;
  std::size_t steps = 0;  // optimiser steps taken; survives a checkpoint, the history does not
  std::uint64_t encoder_hash = 0;
};

// Stream ids for the per-command generator tree.
inline constexpr std::uint64_t kTextInitStream = 1;
inline constexpr std::uint64_t kImageInitStream = 2;
inline constexpr std::uint64_t kShuffleStream = 3;

inline TrainedModel initial_model(std::shared_ptr<const EncoderPair> encoders, std::vector<std::string> class_names,
                                  const TrainConfig& config) {
  config.validate();
  if (!encoders) throw ConfigError("initial_model: no encoder pair");
  if (class_names.size() < 2) throw ConfigError("initial_model: need at least 2 classes");
  if (config.side() != encoders->side()) {
    throw ConfigError("upsample_side + 2*pad = " + std::to_string(config.side()) + " does not match encoder side d=" +
                      std::to_string(encoders->side()));
  }
  TrainedModel model;
  model.image =
      ImageReprogrammer(config.side(), config.pad, config.image_init, derive_seed(config.seed, kImageInitStream));
  model.text = TextReprogrammer::initial(build_vocabulary(class_names, config.vocab_size), encoders->token_width(),
                                         derive_seed(config.seed, kTextInitStream), config.text_init_stddev);
  model.zero_shot_text = model.text;
  model.class_names = std::move(class_names);
  model.config = config;
  model.encoder_hash = encoders->weight_hash();
  model.encoders = std::move(encoders);
  return model;
}

struct CaptionBatch {
  std::vector<std::size_t> tokens;   // all captions concatenated
  std::vector<std::size_t> lengths;  // tokens per caption
};

inline CaptionBatch class_captions(const std::vector<std::string>& class_names, const Vocabulary& vocab) {
  CaptionBatch out;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    const Caption c = make_caption(class_names[i], static_cast<int>(i), vocab);
    out.tokens.insert(out.tokens.end(), c.tokens.begin(), c.tokens.end());
    out.lengths.push_back(c.tokens.size());
  }
  return out;
}

// Optimises only W, theta, b with (momentum) SGD on the symmetric contrastive
// loss; each image is paired with the caption of its class.
inline TrainedModel fit(const LabeledDataset& dataset, std::shared_ptr<const EncoderPair> encoders,
                        const TrainConfig& config, std::ostream* log = nullptr) {
  if (dataset.split != Split::kIdTrain) {
    throw ConfigError("fit: expected an id-train dataset, got " + std::string(split_name(dataset.split)));
  }
  if (dataset.size() == 0) throw ConfigError("fit: empty training set");
  TrainedModel model = initial_model(std::move(encoders), dataset.class_names, config);
  const EncoderPair& enc = *model.encoders;

  const std::size_t n = dataset.size();
  const std::size_t per_epoch = steps_per_epoch(n, config.batch_size);
  const std::size_t total = per_epoch * config.epochs;
  if (total > 0 && config.warmup_steps > total) {
    throw ConfigError("warmup_steps " + std::to_string(config.warmup_steps) + " exceeds total steps " +
                      std::to_string(total));
  }
  const CosineWarmupSchedule schedule{config.learning_rate, config.warmup_steps, total};
  const CaptionBatch captions = class_captions(model.class_names, model.text.vocabulary());
  const bool train_image = config.train_image && config.pad > 0;

  Tensor vel_w(model.image.weights().shape(), 0.0);
  Tensor vel_theta(model.text.table().shape(), 0.0);
  Tensor vel_b(model.text.bias().shape(), 0.0);
  auto sgd = [&](Tensor& param, Tensor& velocity, const Tensor& grad, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      velocity[i] = config.momentum * velocity[i] + grad[i];
      param[i] -= lr * velocity[i];
    }
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, kShuffleStream));
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<std::size_t> labels;
      for (auto i : idx) labels.push_back(static_cast<std::size_t>(dataset.labels[i]));

      ad::Tape tape;
      const auto images = dataset.image_batch(idx);
      ad::Var upsampled = tape.constant(upsample_pad_batch(images, enc.side(), config.pad));
      ad::Var w = train_image ? tape.parameter("W", model.image.weights()) : tape.constant(model.image.weights());
      ad::Var theta = config.train_text ? tape.parameter("theta", model.text.table()) : tape.constant(model.text.table());
      ad::Var bias = config.train_text ? tape.parameter("b", model.text.bias()) : tape.constant(model.text.bias());

      ad::Var image_features = enc.encode_image(tape, model.image.apply(tape, w, upsampled));
      ad::Var class_features = enc.encode_text(tape, model.text.apply(theta, bias, captions.tokens), captions.lengths);
      ad::Var text_features = ad::gather_rows(class_features, labels);
      if (!image_features.value().all_finite() || !text_features.value().all_finite()) {
        throw NonFiniteLoss(step, std::numeric_limits<double>::quiet_NaN());
      }
      ad::Var loss = symmetric_ce_loss(image_features, text_features, config.temperature);

      const double value = loss.value().item();
      if (!std::isfinite(value)) throw NonFiniteLoss(step, value);
      model.loss_history.push_back(value);

      const ad::Gradients grads = loss.requires_grad() ? ad::backward(loss) : ad::Gradients{};
      const double lr = schedule.lr_at(step + 1);
      if (auto it = grads.find("W"); it != grads.end()) sgd(model.image.weights(), vel_w, it->second, lr);
      if (auto it = grads.find("theta"); it != grads.end()) sgd(model.text.table(), vel_theta, it->second, lr);
      if (auto it = grads.find("b"); it != grads.end()) sgd(model.text.bias(), vel_b, it->second, lr);
      ++step;
      model.steps = step;
    }
    if (enc.weight_hash() != model.encoder_hash) throw Error("fit: frozen encoder weights changed during training");
    if (log && !model.loss_history.empty()) {
      *log << "epoch " << epoch + 1 << "/" << config.epochs << " loss " << model.loss_history.back() << "\n";
    }
  }
  return model;
}

// Multinomial logistic regression on frozen features.
struct LinearClassifier {
  Tensor weights;  // [k,m]
  Tensor bias;     // [m]

  std::size_t classes() const { return bias.size(); }

  Tensor logits(const Tensor& features) const {
    ad::Tape tape;
    return ad::add_row(ad::matmul(tape.constant(features), tape.constant(weights)), tape.constant(bias)).value();
  }
};

struct LinearProbeConfig {
  double learning_rate = 20.0;  // features are unit rows
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

inline LinearClassifier linear_probe_fit(const Tensor& features, std::span<const std::int32_t> labels, std::size_t m,
                                         const LinearProbeConfig& config) {
  if (features.rank() != 2 || features.dim(0) != labels.size()) {
    throw ShapeError("linear_probe_fit: features " + to_string(features.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) throw ConfigError("linear_probe_fit: bad config");
  std::set<std::int32_t> distinct;
  for (auto l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= m) throw ConfigError("linear_probe_fit: label out of range");
    distinct.insert(l);
  }
  if (distinct.size() < 2) throw ConfigError("linear_probe_fit: need at least two distinct classes");

  const std::size_t n = features.dim(0), k = features.dim(1);
  LinearClassifier clf{Tensor(Shape{k, m}, 0.0), Tensor(Shape{m}, 0.0)};
  const std::size_t total = steps_per_epoch(n, config.batch_size) * config.epochs;
  const CosineWarmupSchedule schedule{config.learning_rate, 0, total};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, kShuffleStream));
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      Tensor batch(Shape{end - start, k});
      std::vector<std::size_t> targets;
      for (std::size_t r = start; r < end; ++r) {
        auto src = features.row(order[r]);
        std::copy(src.begin(), src.end(), batch.row(r - start).begin());
        targets.push_back(static_cast<std::size_t>(labels[order[r]]));
      }
      ad::Tape tape;
      ad::Var w = tape.parameter("weights", clf.weights);
      ad::Var b = tape.parameter("bias", clf.bias);
      ad::Var loss = ad::softmax_cross_entropy(ad::add_row(ad::matmul(tape.constant(std::move(batch)), w), b), targets);
      const auto grads = ad::backward(loss);
      const double lr = schedule.lr_at(step);
      for (std::size_t i = 0; i < clf.weights.size(); ++i) clf.weights[i] -= lr * grads.at("weights")[i];
      for (std::size_t i = 0; i < clf.bias.size(); ++i) clf.bias[i] -= lr * grads.at("bias")[i];
      ++step;
    }
  }
  return clf;
}

}  // namespace rpk

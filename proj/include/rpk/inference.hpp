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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rpk/datagen.hpp"
#include "rpk/embedding_cache.hpp"
#include "rpk/errors.hpp"
#include "rpk/image_reprogram.hpp"
#include "rpk/numerics/tensor.hpp"
#include "rpk/training.hpp"

namespace rpk {

inline Tensor normalize_rows(Tensor t) {
  const std::size_t n = t.rank() == 1 ? 1 : t.dim(0);
  const std::size_t k = t.size() / std::max<std::size_t>(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = t.data().subspan(i * k, k);
    const double norm = l2_norm(r);
    if (!(norm > 0.0)) throw NumericError("row " + std::to_string(i) + " has zero norm");
    for (double& v : r) v /= norm;
  }
  return t;
}

// (1 - alpha) a + alpha b, elementwise.
inline std::vector<double> blend(std::span<const double> a, std::span<const double> b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1], got " + std::to_string(alpha));
  if (a.size() != b.size()) throw ShapeError("blend: width mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - alpha) * a[i] + alpha * b[i];
  return out;
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Caption features for every class, unit-normalised: reprogrammed g(Phi*(s_i))
// and zero-shot g(Phi_0(s_i)).
struct ClassBank {
  std::vector<std::string> names;
  Tensor reprogrammed;  // [m,k]
  Tensor zero_shot;     // [m,k]

  std::size_t size() const { return names.size(); }
};

inline Tensor caption_features(const EncoderPair& enc, const TextReprogrammer& text,
                               const std::vector<std::string>& class_names) {
  const CaptionBatch captions = class_captions(class_names, text.vocabulary());
  return enc.encode_text(text.apply(captions.tokens), captions.lengths);
}

inline ClassBank build_class_bank(const TrainedModel& model) {
  if (model.class_names.size() < 2) throw ConfigError("class bank needs at least 2 classes");
  ClassBank bank;
  bank.names = model.class_names;
  bank.reprogrammed = normalize_rows(caption_features(*model.encoders, model.text, model.class_names));
  bank.zero_shot = normalize_rows(caption_features(*model.encoders, model.zero_shot_text, model.class_names));
  return bank;
}

// f(psi(x)) and f(U(x)) for a batch of [3,s,s] images, raw (not normalised).
inline Tensor reprogrammed_image_features(const TrainedModel& model, std::span<const Tensor> images) {
  const std::size_t d = model.image.side();
  return model.encoders->encode_image(model.image.apply_upsampled(upsample_pad_batch(images, d, model.image.pad())));
}

inline Tensor zero_shot_image_features(const TrainedModel& model, std::span<const Tensor> images) {
  return model.encoders->encode_image(upsample_pad_batch(images, model.image.side(), model.image.pad()));
}

// Unit-normalised image features of a whole dataset.
struct ImageFeatures {
  Tensor reprogrammed;  // [n,k]
  Tensor zero_shot;     // [n,k]

  std::size_t size() const { return reprogrammed.rank() == 2 ? reprogrammed.dim(0) : 0; }
};

inline ImageFeatures image_features(const TrainedModel& model, const LabeledDataset& ds, std::size_t batch = 64) {
  const std::size_t n = ds.size(), k = model.encoders->feature_width();
  ImageFeatures out{Tensor(Shape{n, k}), Tensor(Shape{n, k})};
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
    const auto images = ds.image_batch(idx);
    const Tensor rp = normalize_rows(reprogrammed_image_features(model, images));
    const Tensor zs = normalize_rows(zero_shot_image_features(model, images));
    std::copy(rp.data().begin(), rp.data().end(), out.reprogrammed.data().begin() + static_cast<std::ptrdiff_t>(start * k));
    std::copy(zs.data().begin(), zs.data().end(), out.zero_shot.data().begin() + static_cast<std::ptrdiff_t>(start * k));
  }
  return out;
}

// tau * <image_i, text_j> over unit rows -> [n,m].
inline Tensor similarity_logits(const Tensor& image_rows, const Tensor& text_rows, double temperature) {
  const std::size_t n = image_rows.dim(0), m = text_rows.dim(0);
  if (image_rows.dim(1) != text_rows.dim(1)) {
    throw ShapeError("similarity_logits: " + to_string(image_rows.shape()) + " vs " + to_string(text_rows.shape()));
  }
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = temperature * dot(image_rows.row(i), text_rows.row(j));
  return out;
}

inline Tensor zero_shot_logits(const ImageFeatures& f, const ClassBank& bank, double temperature) {
  return similarity_logits(f.zero_shot, bank.zero_shot, temperature);
}

inline Tensor reprogrammer_logits(const ImageFeatures& f, const ClassBank& bank, double temperature) {
  return similarity_logits(f.reprogrammed, bank.reprogrammed, temperature);
}

// Blended rows (1 - alpha) reprogrammed + alpha zero-shot, left unnormalised.
inline Tensor blend_rows(const Tensor& reprogrammed, const Tensor& zero_shot, double alpha) {
  const std::vector<double> v = blend(reprogrammed.data(), zero_shot.data(), alpha);
  return Tensor(reprogrammed.shape(), v);
}

// tau * F(x_i)^T G(s_j). At alpha = 0 or 1 the blended rows are exactly the
// unit reprogrammed / zero-shot rows, so these logits coincide bit for bit
// with reprogrammer_logits / zero_shot_logits.
inline Tensor residual_logits(const ImageFeatures& f, const ClassBank& bank, double alpha, double temperature) {
  return similarity_logits(blend_rows(f.reprogrammed, f.zero_shot, alpha),
                           blend_rows(bank.reprogrammed, bank.zero_shot, alpha), temperature);
}

inline std::vector<std::int32_t> predictions(const Tensor& logits) {
  std::vector<std::int32_t> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::int32_t>(argmax(logits.row(i)));
  return out;
}

// Single-image entry points.

inline std::vector<double> rp_logits(const TrainedModel& model, const Tensor& image, const ClassBank& bank,
                                     double temperature) {
  if (bank.size() == 0) throw ConfigError("rp_logits: empty class bank");
  const std::vector<Tensor> one{image};
  const Tensor f = normalize_rows(reprogrammed_image_features(model, one));
  return similarity_logits(f, bank.reprogrammed, temperature).values();
}

inline std::vector<double> rrp_feature_image(const TrainedModel& model, const Tensor& image, double alpha) {
  const std::vector<Tensor> one{image};
  const Tensor rp = normalize_rows(reprogrammed_image_features(model, one));
  const Tensor zs = normalize_rows(zero_shot_image_features(model, one));
  return blend(rp.data(), zs.data(), alpha);
}

inline std::vector<double> rrp_feature_text(const TrainedModel& model, std::size_t class_index, double alpha) {
  const std::vector<std::string> one{model.class_names.at(class_index)};
  const Tensor rp = normalize_rows(caption_features(*model.encoders, model.text, one));
  const Tensor zs = normalize_rows(caption_features(*model.encoders, model.zero_shot_text, one));
  return blend(rp.data(), zs.data(), alpha);
}

inline std::size_t rrp_classify(const TrainedModel& model, const Tensor& image, const ClassBank& bank, double alpha) {
  const std::vector<double> f = rrp_feature_image(model, image, alpha);
  std::vector<double> scores(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::vector<double> g = blend(bank.reprogrammed.row(i), bank.zero_shot.row(i), alpha);
    scores[i] = dot(f, g);
  }
  return argmax(scores);
}

// Expansion of F^T G into the five terms of the residual reprogrammer:
//   (1-a)^2 fh.gh + a^2 f.g + a(1-a) gh.g + a(1-a) f.fh + a(1-a) (fh-gh).(g-f)
// with fh/gh the unit reprogrammed features and f/g the unit zero-shot ones.
struct ResidualTerms {
  double reprogrammer = 0;       // (1-a)^2 fh.gh
  double zero_shot = 0;          // a^2 f.g
  double text_regularizer = 0;   // a(1-a) gh.g
  double image_regularizer = 0;  // a(1-a) f.fh
  double closeness = 0;          // a(1-a) (fh-gh).(g-f)

  double sum() const { return reprogrammer + zero_shot + text_regularizer + image_regularizer + closeness; }
};

inline ResidualTerms residual_terms(std::span<const double> fh, std::span<const double> f, std::span<const double> gh,
                                    std::span<const double> g, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  const std::size_t k = fh.size();
  if (f.size() != k || gh.size() != k || g.size() != k) throw ShapeError("residual_terms: width mismatch");
  const double a = alpha, c = 1.0 - alpha;
  double closeness = 0.0;
  for (std::size_t i = 0; i < k; ++i) closeness += (fh[i] - gh[i]) * (g[i] - f[i]);
  ResidualTerms t;
  t.reprogrammer = c * c * dot(fh, gh);
  t.zero_shot = a * a * dot(f, g);
  t.text_regularizer = a * c * dot(gh, g);
  t.image_regularizer = a * c * dot(f, fh);
  t.closeness = a * c * closeness;
  return t;
}

inline ResidualTerms residual_decomposition(const TrainedModel& model, const Tensor& image, std::size_t class_index,
                                            double alpha) {
  const std::vector<Tensor> one{image};
  const Tensor fh = normalize_rows(reprogrammed_image_features(model, one));
  const Tensor f = normalize_rows(zero_shot_image_features(model, one));
  const std::vector<std::string> name{model.class_names.at(class_index)};
  const Tensor gh = normalize_rows(caption_features(*model.encoders, model.text, name));
  const Tensor g = normalize_rows(caption_features(*model.encoders, model.zero_shot_text, name));
  return residual_terms(fh.data(), f.data(), gh.data(), g.data(), alpha);
}

// Per-sample image features (ids = dataset indices) and per-class caption
// features (ids = class names) for external projection tools.
struct EmbeddingExport {
  EmbeddingCache image_zero_shot, image_reprogrammed, image_blended;
  EmbeddingCache text_zero_shot, text_reprogrammed, text_blended;
};

inline EmbeddingExport export_embeddings(const TrainedModel& model, const LabeledDataset& ds, double alpha) {
  const ImageFeatures f = image_features(model, ds);
  const ClassBank bank = build_class_bank(model);
  EmbeddingExport out;
  for (auto* c : {&out.text_zero_shot, &out.text_reprogrammed, &out.text_blended}) c->modality = Modality::kText;
  const Tensor fb = blend_rows(f.reprogrammed, f.zero_shot, alpha);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::string id = std::to_string(i);
    out.image_zero_shot.append(id, f.zero_shot.row(i));
    out.image_reprogrammed.append(id, f.reprogrammed.row(i));
    out.image_blended.append(id, fb.row(i));
  }
  const Tensor gb = blend_rows(bank.reprogrammed, bank.zero_shot, alpha);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    out.text_zero_shot.append(bank.names[j], bank.zero_shot.row(j));
    out.text_reprogrammed.append(bank.names[j], bank.reprogrammed.row(j));
    out.text_blended.append(bank.names[j], gb.row(j));
  }
  const auto k = static_cast<std::uint32_t>(model.encoders->feature_width());
  for (auto* c : {&out.image_zero_shot, &out.image_reprogrammed, &out.image_blended, &out.text_zero_shot,
                  &out.text_reprogrammed, &out.text_blended})
    c->width = k;
  return out;
}

}  // namespace rpk

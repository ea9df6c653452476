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

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rpk/binary_io.hpp"
#include "rpk/errors.hpp"
#include "rpk/numerics/ops.hpp"
#include "rpk/numerics/tape.hpp"
#include "rpk/rng.hpp"

namespace rpk {

struct EncoderSpec {
  std::uint64_t seed = 0;
  std::size_t side = 224;           // d: images are 3 x d x d
  std::size_t feature_width = 512;  // k
  std::size_t hidden_width = 64;
  std::size_t token_width = 64;  // e: width of embedded tokens fed to the text tower

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

// Frozen joint image/text encoder pair. Each tower is a one-hidden-layer tanh
// MLP; both towers end in the same projection into the k-wide joint space.
// Weights are immutable after construction and shared read-only.
class EncoderPair {
 public:
  static EncoderPair toy(const EncoderSpec& spec) {
    if (spec.side < 8) throw ConfigError("encoder side d must be >= 8, got " + std::to_string(spec.side));
    if (spec.feature_width < 2) {
      throw ConfigError("feature width k must be >= 2, got " + std::to_string(spec.feature_width));
    }
    if (spec.hidden_width < 1 || spec.token_width < 1) throw ConfigError("hidden and token widths must be >= 1");

    Rng rng(spec.seed);
    const std::size_t pixels = 3 * spec.side * spec.side;
    auto gaussian = [&rng](Shape shape, double stddev) {
      Tensor t(std::move(shape));
      for (double& v : t.data()) v = rng.normal(0.0, stddev);
      return std::make_shared<const Tensor>(std::move(t));
    };

    EncoderPair pair;
    pair.spec_ = spec;
    pair.image_in_ = gaussian({pixels, spec.hidden_width}, kImageGain / std::sqrt(static_cast<double>(pixels)));
    pair.image_bias_ = gaussian({spec.hidden_width}, 0.1);
    pair.text_in_ = gaussian({spec.token_width, spec.hidden_width}, kTextGain / std::sqrt(static_cast<double>(spec.token_width)));
    pair.text_bias_ = gaussian({spec.hidden_width}, 0.1);
    pair.projection_ = gaussian({spec.hidden_width, spec.feature_width}, 1.0 / std::sqrt(static_cast<double>(spec.hidden_width)));
    return pair;
  }

  const EncoderSpec& spec() const { return spec_; }
  std::size_t side() const { return spec_.side; }
  std::size_t feature_width() const { return spec_.feature_width; }
  std::size_t token_width() const { return spec_.token_width; }

  // f: [b,3,d,d] -> [b,k]. Differentiable w.r.t. the batch only.
  ad::Var encode_image(ad::Tape& tape, const ad::Var& batch) const {
    const Shape& s = batch.shape();
    if (s.size() != 4 || s[1] != 3 || s[2] != spec_.side || s[3] != spec_.side) {
      throw ShapeError("encode_image: expected batch of shape [b,3," + std::to_string(spec_.side) + "," +
                       std::to_string(spec_.side) + "] (d=" + std::to_string(spec_.side) + "), got " +
                       to_string(s));
    }
    const std::size_t b = s[0];
    ad::Var flat = ad::reshape(batch, {b, 3 * spec_.side * spec_.side});
    ad::Var hidden = ad::tanh(ad::add_row(ad::matmul(flat, tape.constant(image_in_)), tape.constant(image_bias_)));
    return ad::matmul(hidden, tape.constant(projection_));
  }

  // g: embedded tokens of several captions stacked as [sum(lengths), e] -> [lengths.size(), k].
  ad::Var encode_text(ad::Tape& tape, const ad::Var& tokens, std::vector<std::size_t> lengths) const {
    const Shape& s = tokens.shape();
    if (s.size() != 2 || s[1] != spec_.token_width) {
      throw ShapeError("encode_text: expected token embeddings of width e=" + std::to_string(spec_.token_width) +
                       ", got shape " + to_string(s));
    }
    ad::Var pooled = ad::segment_mean(tokens, std::move(lengths));
    ad::Var hidden = ad::tanh(ad::add_row(ad::matmul(pooled, tape.constant(text_in_)), tape.constant(text_bias_)));
    return ad::matmul(hidden, tape.constant(projection_));
  }

  // g on a uniform [b,L,e] batch.
  ad::Var encode_text(ad::Tape& tape, const ad::Var& tokens) const {
    const Shape& s = tokens.shape();
    if (s.size() != 3) throw ShapeError("encode_text: expected [b,L,e], got " + to_string(s));
    if (s[2] != spec_.token_width) {
      throw ShapeError("encode_text: expected token embeddings of width e=" + std::to_string(spec_.token_width) +
                       ", got shape " + to_string(s));
    }
    return encode_text(tape, ad::reshape(tokens, {s[0] * s[1], s[2]}), std::vector<std::size_t>(s[0], s[1]));
  }

  Tensor encode_image(const Tensor& batch) const {
    ad::Tape tape;
    return encode_image(tape, tape.constant(batch)).value();
  }

  Tensor encode_text(const Tensor& tokens, std::vector<std::size_t> lengths) const {
    ad::Tape tape;
    return encode_text(tape, tape.constant(tokens), std::move(lengths)).value();
  }

  // Digest of every weight bit; used to assert the pair stays frozen.
  std::uint64_t weight_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* t : {image_in_.get(), image_bias_.get(), text_in_.get(), text_bias_.get(), projection_.get()}) {
      h = io::fnv1a(std::as_bytes(t->data()), h);
    }
    return h;
  }

  const Tensor& image_weights() const { return *image_in_; }
  const Tensor& projection() const { return *projection_; }

 private:
  static constexpr double kImageGain = 2.0;
  static constexpr double kTextGain = 1.0;

  EncoderSpec spec_;
  std::shared_ptr<const Tensor> image_in_, image_bias_, text_in_, text_bias_, projection_;
};

inline EncoderPair toy_encoder_pair(std::uint64_t seed, std::size_t d, std::size_t k, std::size_t hidden_width,
                                    std::size_t token_width = 64) {
  return EncoderPair::toy(EncoderSpec{seed, d, k, hidden_width, token_width});
}

}  // namespace rpk

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
#include <memory>
#include <string>

#include "rpk/errors.hpp"
#include "rpk/numerics/ops.hpp"
#include "rpk/numerics/tensor.hpp"
#include "rpk/rng.hpp"

namespace rpk {

// d x d mask: 0 on the centred (d - 2 pad)^2 region that holds the image,
// 1 on the border that gets reprogrammed.
inline Tensor build_mask(std::size_t d, std::size_t pad) {
  if (2 * pad >= d) {
    throw ConfigError("pad " + std::to_string(pad) + " leaves no image region inside d=" + std::to_string(d) +
                      " (need 2*pad < d)");
  }
  Tensor mask(Shape{d, d}, 1.0);
  for (std::size_t i = pad; i < d - pad; ++i)
    for (std::size_t j = pad; j < d - pad; ++j) mask.at(i, j) = 0.0;
  return mask;
}

// Bilinear resize of a [3,s,s] image to [3,t,t], half-pixel centres with
// edge clamping (so s == t reproduces the input exactly).
inline Tensor resize_bilinear(const Tensor& image, std::size_t t) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2)) {
    throw ShapeError("resize_bilinear: expected [3,s,s], got " + to_string(image.shape()));
  }
  const std::size_t s = image.dim(1);
  if (s == t) return image;
  Tensor out(Shape{3, t, t});
  const double ratio = static_cast<double>(s) / static_cast<double>(t);
  auto coord = [&](std::size_t i, std::size_t& lo, std::size_t& hi, double& frac) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(s - 1));
    lo = static_cast<std::size_t>(std::floor(src));
    hi = std::min(lo + 1, s - 1);
    frac = src - static_cast<double>(lo);
  };
  const auto in = image.data();
  auto o = out.data();
  for (std::size_t y = 0; y < t; ++y) {
    std::size_t y0, y1;
    double fy;
    coord(y, y0, y1, fy);
    for (std::size_t x = 0; x < t; ++x) {
      std::size_t x0, x1;
      double fx;
      coord(x, x0, x1, fx);
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t base = c * s * s;
        const double top = in[base + y0 * s + x0] * (1 - fx) + in[base + y0 * s + x1] * fx;
        const double bottom = in[base + y1 * s + x0] * (1 - fx) + in[base + y1 * s + x1] * fx;
        o[c * t * t + y * t + x] = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

// U: resize [3,s,s] to the (d - 2 pad) inner region and centre it in a
// zero [3,d,d] canvas.
inline Tensor upsample_pad(const Tensor& image, std::size_t d, std::size_t pad) {
  if (2 * pad >= d) throw ConfigError("upsample_pad: need 2*pad < d, got pad=" + std::to_string(pad) + " d=" + std::to_string(d));
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2)) {
    throw ShapeError("upsample_pad: expected [3,s,s], got " + to_string(image.shape()));
  }
  const std::size_t inner = d - 2 * pad;
  if (image.dim(1) > inner) {
    throw ConfigError("upsample_pad: source side " + std::to_string(image.dim(1)) + " exceeds target region " +
                      std::to_string(inner));
  }
  const Tensor resized = resize_bilinear(image, inner);
  Tensor out(Shape{3, d, d}, 0.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < inner; ++y)
      for (std::size_t x = 0; x < inner; ++x)
        out[c * d * d + (y + pad) * d + (x + pad)] = resized[c * inner * inner + y * inner + x];
  return out;
}

// U applied to every image of an [n,3,s,s] batch (given as flat rows) -> [n,3,d,d].
inline Tensor upsample_pad_batch(std::span<const Tensor> images, std::size_t d, std::size_t pad) {
  Tensor out(Shape{images.size(), 3, d, d});
  const std::size_t stride = 3 * d * d;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor u = upsample_pad(images[i], d, pad);
    std::copy(u.data().begin(), u.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

enum class ImageInit { kZeros, kUniform };

// psi(X) = U(X) + tanh(W (.) M). W is stored channel-first, [3,d,d], to line
// up with the image layout; M is shared by the three channels.
class ImageReprogrammer {
 public:
  ImageReprogrammer() = default;

  ImageReprogrammer(std::size_t d, std::size_t pad, ImageInit init = ImageInit::kZeros, std::uint64_t seed = 0)
      : side_(d), pad_(pad), weights_(Shape{3, d, d}, 0.0), mask_(channel_mask(d, pad)) {
    if (init == ImageInit::kUniform) {
      Rng rng(seed);
      for (double& w : weights_.data()) w = rng.uniform(-0.01, 0.01);
    }
  }

  std::size_t side() const { return side_; }
  std::size_t pad() const { return pad_; }
  std::size_t inner() const { return side_ - 2 * pad_; }

  const Tensor& weights() const { return weights_; }
  Tensor& weights() { return weights_; }
  void set_weights(Tensor w) {
    require_same_shape(w, weights_, "ImageReprogrammer::set_weights");
    weights_ = std::move(w);
  }
  const Tensor& mask() const { return mask_; }

  // tanh(W (.) M) as a function of a weights Var, [3,d,d].
  ad::Var perturbation(ad::Tape& tape, const ad::Var& weights) const {
    require_same_shape(weights.value(), weights_, "ImageReprogrammer::perturbation");
    return ad::tanh(ad::mul(weights, tape.constant(mask_)));
  }

  // psi over an already up-sampled [b,3,d,d] batch.
  ad::Var apply(ad::Tape& tape, const ad::Var& weights, const ad::Var& upsampled) const {
    const Shape& s = upsampled.shape();
    if (s.size() != 4 || s[1] != 3 || s[2] != side_ || s[3] != side_) {
      throw ShapeError("ImageReprogrammer::apply: expected [b,3," + std::to_string(side_) + "," + std::to_string(side_) +
                       "], got " + to_string(s));
    }
    ad::Var flat = ad::reshape(upsampled, {s[0], 3 * side_ * side_});
    ad::Var delta = ad::reshape(perturbation(tape, weights), {3 * side_ * side_});
    return ad::reshape(ad::add_row(flat, delta), s);
  }

  Tensor perturbation() const {
    Tensor p = weights_;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::tanh(p[i] * mask_[i]);
    return p;
  }

  // psi on a raw [3,s,s] image.
  Tensor apply(const Tensor& image) const {
    Tensor out = upsample_pad(image, side_, pad_);
    const Tensor p = perturbation();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    return out;
  }

  // psi on an up-sampled [b,3,d,d] batch.
  Tensor apply_upsampled(const Tensor& batch) const {
    const Tensor p = perturbation();
    Tensor out = batch;
    const std::size_t stride = p.size();
    if (batch.size() % stride != 0) throw ShapeError("apply_upsampled: batch shape " + to_string(batch.shape()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i % stride];
    return out;
  }

 private:
  static Tensor channel_mask(std::size_t d, std::size_t pad) {
    const Tensor m = build_mask(d, pad);
    Tensor out(Shape{3, d, d});
    for (std::size_t c = 0; c < 3; ++c)
      std::copy(m.data().begin(), m.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(c * d * d));
    return out;
  }

  std::size_t side_ = 0;
  std::size_t pad_ = 0;
  Tensor weights_;
  Tensor mask_;
};

}  // namespace rpk

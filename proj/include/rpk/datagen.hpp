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
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpk/binary_io.hpp"
#include "rpk/errors.hpp"
#include "rpk/numerics/tensor.hpp"
#include "rpk/rng.hpp"

namespace rpk {

enum class Split : std::uint8_t { kIdTrain = 0, kIdTest = 1, kCovariateOod = 2, kSemanticOod = 3 };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kIdTrain: return "id-train";
    case Split::kIdTest: return "id-test";
    case Split::kCovariateOod: return "covariate-ood";
    case Split::kSemanticOod: return "semantic-ood";
  }
  return "unknown";
}

inline constexpr int kOodLabel = -1;

// n images of 3 x s x s float32 pixels in [0,1], with integer labels.
struct LabeledDataset {
  std::vector<float> images;
  std::vector<std::int32_t> labels;
  std::vector<std::string> class_names;
  Split split = Split::kIdTrain;
  std::size_t side = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t pixels() const { return 3 * side * side; }

  Tensor image(std::size_t i) const {
    Tensor t(Shape{3, side, side});
    const std::size_t p = pixels();
    for (std::size_t j = 0; j < p; ++j) t[j] = images[i * p + j];
    return t;
  }

  std::vector<Tensor> image_batch(std::span<const std::size_t> indices) const {
    std::vector<Tensor> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(image(i));
    return out;
  }

  // Ordinary equality ignores the seed: it is not part of the file format.
  bool same_content(const LabeledDataset& o) const {
    return images == o.images && labels == o.labels && class_names == o.class_names && split == o.split &&
           side == o.side;
  }
};

namespace gen_detail {

struct Rgb {
  double r, g, b;
};

enum class Figure { kSquare, kCircle, kTriangle, kCross, kRing, kDiamond };

struct Prototype {
  std::string_view name;
  Figure figure;
  Rgb color;
};

// ID classes: one coloured figure on a dark background.
inline constexpr std::array<Prototype, 12> kIdPrototypes{{
    {"red square", Figure::kSquare, {0.90, 0.15, 0.15}},
    {"green circle", Figure::kCircle, {0.15, 0.80, 0.20}},
    {"blue triangle", Figure::kTriangle, {0.20, 0.30, 0.95}},
    {"yellow cross", Figure::kCross, {0.95, 0.90, 0.15}},
    {"purple ring", Figure::kRing, {0.65, 0.20, 0.85}},
    {"cyan diamond", Figure::kDiamond, {0.10, 0.85, 0.90}},
    {"orange circle", Figure::kCircle, {0.95, 0.55, 0.10}},
    {"white triangle", Figure::kTriangle, {0.95, 0.95, 0.95}},
    {"pink square", Figure::kSquare, {0.95, 0.50, 0.70}},
    {"olive cross", Figure::kCross, {0.50, 0.55, 0.10}},
    {"teal ring", Figure::kRing, {0.05, 0.50, 0.50}},
    {"gray diamond", Figure::kDiamond, {0.55, 0.55, 0.55}},
}};

// Semantic-OOD families: full-frame textures, never a single figure.
inline constexpr std::array<std::string_view, 5> kOodFamilies{"stripes", "checkerboard", "gradient", "dots",
                                                              "speckle"};

inline bool inside(Figure f, double dx, double dy, double r) {
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (f) {
    case Figure::kSquare: return ax <= r && ay <= r;
    case Figure::kCircle: return dx * dx + dy * dy <= r * r;
    case Figure::kTriangle: return dy <= r && dy >= -r && ax <= (dy + r) * 0.5;
    case Figure::kCross: return (ax <= r * 0.3 && ay <= r) || (ay <= r * 0.3 && ax <= r);
    case Figure::kRing: {
      const double q = dx * dx + dy * dy;
      return q <= r * r && q >= 0.45 * r * r;
    }
    case Figure::kDiamond: return ax + ay <= r;
  }
  return false;
}

inline float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Jitter {
  double cx = 0, cy = 0, scale = 1, background = 0.1, noise = 0;
  Rgb tint{0, 0, 0};
};

inline void render_figure(const Prototype& p, std::size_t s, const Jitter& j, Rng* noise_rng, float* out) {
  const double half = (static_cast<double>(s) - 1.0) / 2.0;
  const double r = 0.3 * static_cast<double>(s) * j.scale;
  const std::array<double, 3> fg{p.color.r + j.tint.r, p.color.g + j.tint.g, p.color.b + j.tint.b};
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const bool on = inside(p.figure, static_cast<double>(x) - half - j.cx, static_cast<double>(y) - half - j.cy, r);
      for (std::size_t c = 0; c < 3; ++c) {
        double v = on ? fg[c] : j.background;
        if (noise_rng) v += noise_rng->normal(0.0, j.noise);
        out[c * s * s + y * s + x] = clamp01(v);
      }
    }
  }
}

inline Rgb random_color(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

inline void render_texture(std::size_t family, std::size_t s, Rng& rng, float* out) {
  const Rgb a = random_color(rng), b = random_color(rng);
  const double period = rng.uniform(3.0, 8.0);
  const double phase = rng.uniform(0.0, period);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto blend = [&](double t, std::size_t c) {
    const double av = c == 0 ? a.r : c == 1 ? a.g : a.b;
    const double bv = c == 0 ? b.r : c == 1 ? b.g : b.b;
    return av * (1 - t) + bv * t;
  };
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double u = fx * ca + fy * sa + phase;
      double t = 0;
      switch (family) {
        case 0: t = std::fmod(u, period) < period / 2 ? 0.0 : 1.0; break;
        case 1: t = ((static_cast<long>((fx + phase) / period) + static_cast<long>((fy + phase) / period)) & 1) ? 1.0 : 0.0; break;
        case 2: t = u / (static_cast<double>(s) * 1.5 + period); break;
        case 3: {
          const double mx = std::fmod(fx + phase, period) - period / 2, my = std::fmod(fy + phase, period) - period / 2;
          t = mx * mx + my * my <= period * period / 10 ? 1.0 : 0.0;
          break;
        }
        default: t = rng.uniform(); break;
      }
      for (std::size_t c = 0; c < 3; ++c) out[c * s * s + y * s + x] = clamp01(blend(std::clamp(t, 0.0, 1.0), c));
    }
  }
}

}  // namespace gen_detail

inline std::size_t max_id_classes() { return gen_detail::kIdPrototypes.size(); }

inline std::vector<std::string> id_class_names(std::size_t m) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) names.emplace_back(gen_detail::kIdPrototypes.at(i).name);
  return names;
}

// Canonical, jitter-free rendering of ID class `label`.
inline Tensor id_prototype(std::size_t label, std::size_t s) {
  std::vector<float> buf(3 * s * s);
  gen_detail::render_figure(gen_detail::kIdPrototypes.at(label), s, gen_detail::Jitter{}, nullptr, buf.data());
  Tensor t(Shape{3, s, s});
  for (std::size_t i = 0; i < buf.size(); ++i) t[i] = buf[i];
  return t;
}

// Balanced ID set: label i % m, each image its class prototype under seeded
// position/scale/colour/background jitter plus pixel noise.
inline LabeledDataset gen_id(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t s,
                             Split split = Split::kIdTrain) {
  if (m < 2) throw ConfigError("gen_id: need at least 2 classes, got " + std::to_string(m));
  if (m > max_id_classes()) throw ConfigError("gen_id: at most " + std::to_string(max_id_classes()) + " classes available");
  if (n < m) throw ConfigError("gen_id: n=" + std::to_string(n) + " smaller than m=" + std::to_string(m));
  if (s < 4) throw ConfigError("gen_id: image side must be >= 4");
  if (split != Split::kIdTrain && split != Split::kIdTest) throw ConfigError("gen_id: split must be id-train or id-test");

  LabeledDataset ds;
  ds.class_names = id_class_names(m);
  ds.split = split;
  ds.side = s;
  ds.seed = seed;
  ds.labels.resize(n);
  ds.images.resize(n * ds.pixels());
  const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(split));
  const double sd = static_cast<double>(s);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(stream, i));
    const auto label = static_cast<std::int32_t>(i % m);
    gen_detail::Jitter j;
    j.cx = rng.uniform(-sd / 8, sd / 8);
    j.cy = rng.uniform(-sd / 8, sd / 8);
    j.scale = rng.uniform(0.8, 1.2);
    j.background = rng.uniform(0.05, 0.2);
    j.noise = 0.03;
    j.tint = {rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)};
    ds.labels[i] = label;
    gen_detail::render_figure(gen_detail::kIdPrototypes[static_cast<std::size_t>(label)], s, j, &rng,
                              ds.images.data() + i * ds.pixels());
  }
  return ds;
}

// Textures from families disjoint from every ID prototype; labels are -1.
inline LabeledDataset gen_semantic_ood(std::uint64_t seed, std::size_t n, std::size_t s) {
  if (n < 1) throw ConfigError("gen_semantic_ood: n must be >= 1");
  if (s < 4) throw ConfigError("gen_semantic_ood: image side must be >= 4");
  LabeledDataset ds;
  for (auto f : gen_detail::kOodFamilies) ds.class_names.emplace_back(f);
  ds.split = Split::kSemanticOod;
  ds.side = s;
  ds.seed = seed;
  ds.labels.assign(n, kOodLabel);
  ds.images.resize(n * ds.pixels());
  const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(Split::kSemanticOod));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(stream, i));
    gen_detail::render_texture(i % gen_detail::kOodFamilies.size(), s, rng, ds.images.data() + i * ds.pixels());
  }
  return ds;
}

enum class ShiftKind { kRotate, kTint, kNoise, kBlur };

inline std::string_view shift_kind_name(ShiftKind k) {
  switch (k) {
    case ShiftKind::kRotate: return "rotate";
    case ShiftKind::kTint: return "color-tint";
    case ShiftKind::kNoise: return "noise";
    case ShiftKind::kBlur: return "blur-like";
  }
  return "unknown";
}

inline ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "rotate") return ShiftKind::kRotate;
  if (name == "color-tint" || name == "tint") return ShiftKind::kTint;
  if (name == "noise") return ShiftKind::kNoise;
  if (name == "blur-like" || name == "blur") return ShiftKind::kBlur;
  throw ConfigError("unknown shift kind '" + std::string(name) + "' (rotate, color-tint, noise, blur-like)");
}

// magnitude: rotate = degrees; color-tint = blend weight toward a warm tint
// (clamped to 1); noise = Gaussian stddev; blur-like = number of 3x3 box passes
// (fractional part blends one extra pass).
struct ShiftSpec {
  ShiftKind kind = ShiftKind::kRotate;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

namespace gen_detail {

inline void rotate(const float* in, float* out, std::size_t s, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), sn = std::sin(theta);
  const double half = (static_cast<double>(s) - 1.0) / 2.0;
  const double lim = static_cast<double>(s) - 0.5;
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const double dx = static_cast<double>(x) - half, dy = static_cast<double>(y) - half;
      double sx = half + c * dx + sn * dy;
      double sy = half - sn * dx + c * dy;
      const bool outside = sx < -0.5 || sy < -0.5 || sx > lim || sy > lim;
      sx = std::clamp(sx, 0.0, static_cast<double>(s - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(s - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx)), y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, s - 1), y1 = std::min(y0 + 1, s - 1);
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const float* p = in + ch * s * s;
        double v = 0.0;
        if (!outside) {
          v = (p[y0 * s + x0] * (1 - fx) + p[y0 * s + x1] * fx) * (1 - fy) +
              (p[y1 * s + x0] * (1 - fx) + p[y1 * s + x1] * fx) * fy;
        }
        out[ch * s * s + y * s + x] = clamp01(v);
      }
    }
  }
}

inline void box_blur(const float* in, float* out, std::size_t s) {
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const float* p = in + ch * s * s;
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        double acc = 0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<long>(s) || xx >= static_cast<long>(s)) continue;
            acc += p[static_cast<std::size_t>(yy) * s + static_cast<std::size_t>(xx)];
            ++cnt;
          }
        }
        out[ch * s * s + y * s + x] = clamp01(acc / cnt);
      }
    }
  }
}

}  // namespace gen_detail

// Same labels and class names, transformed pixels, split retagged covariate-ood.
inline LabeledDataset apply_shift(const LabeledDataset& ds, const ShiftSpec& spec) {
  if (ds.split != Split::kIdTrain && ds.split != Split::kIdTest) {
    throw ConfigError("apply_shift: input must be an ID split, got " + std::string(split_name(ds.split)));
  }
  if (!(spec.magnitude >= 0.0) || !std::isfinite(spec.magnitude)) throw ConfigError("apply_shift: magnitude must be >= 0");
  LabeledDataset out = ds;
  out.split = Split::kCovariateOod;
  if (spec.magnitude == 0.0) return out;

  const std::size_t s = ds.side, p = ds.pixels();
  std::vector<float> scratch(p);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const float* src = ds.images.data() + i * p;
    float* dst = out.images.data() + i * p;
    switch (spec.kind) {
      case ShiftKind::kRotate: gen_detail::rotate(src, dst, s, spec.magnitude); break;
      case ShiftKind::kTint: {
        const double w = std::min(spec.magnitude, 1.0);
        const std::array<double, 3> tint{1.0, 0.6, 0.2};
        for (std::size_t j = 0; j < p; ++j) dst[j] = gen_detail::clamp01(src[j] * (1 - w) + tint[j / (s * s)] * w);
        break;
      }
      case ShiftKind::kNoise: {
        Rng rng(derive_seed(derive_seed(spec.seed, 0x5eed), i));
        for (std::size_t j = 0; j < p; ++j) dst[j] = gen_detail::clamp01(src[j] + rng.normal(0.0, spec.magnitude));
        break;
      }
      case ShiftKind::kBlur: {
        const auto passes = static_cast<std::size_t>(std::floor(spec.magnitude));
        const double frac = spec.magnitude - static_cast<double>(passes);
        std::copy(src, src + p, dst);
        for (std::size_t k = 0; k < passes; ++k) {
          gen_detail::box_blur(dst, scratch.data(), s);
          std::copy(scratch.begin(), scratch.end(), dst);
        }
        if (frac > 0) {
          gen_detail::box_blur(dst, scratch.data(), s);
          for (std::size_t j = 0; j < p; ++j) dst[j] = gen_detail::clamp01(dst[j] * (1 - frac) + scratch[j] * frac);
        }
        break;
      }
    }
  }
  return out;
}

// "kind:magnitude", e.g. "rotate:30" or "noise:0.1".
inline ShiftSpec parse_shift(std::string_view text, std::uint64_t seed = 0) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("shift must look like kind:magnitude, got '" + std::string(text) + "'");
  ShiftSpec spec;
  spec.kind = parse_shift_kind(text.substr(0, colon));
  try {
    spec.magnitude = std::stod(std::string(text.substr(colon + 1)));
  } catch (const std::exception&) {
    throw ConfigError("bad shift magnitude in '" + std::string(text) + "'");
  }
  if (!(spec.magnitude >= 0.0)) throw ConfigError("shift magnitude must be >= 0");
  spec.seed = seed;
  return spec;
}

// File layout (little-endian): "RPKD1" | u32 version | u32 n | u32 m | u32 s |
// m x {u16 len | utf-8 name} | n*3*s*s f32 | n i32 labels | u8 split tag
inline constexpr std::string_view kDatasetMagic = "RPKD1";
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string encode_dataset(const LabeledDataset& ds) {
  if (ds.images.size() != ds.size() * ds.pixels()) throw IntegrityError("dataset: image block does not match n*3*s*s");
  io::ByteWriter w;
  w.bytes(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u32(static_cast<std::uint32_t>(ds.class_names.size()));
  w.u32(static_cast<std::uint32_t>(ds.side));
  for (const auto& name : ds.class_names) w.short_string(name);
  w.f32_array(ds.images);
  for (auto l : ds.labels) w.i32(l);
  w.u8(static_cast<std::uint8_t>(ds.split));
  return w.buffer();
}

inline LabeledDataset decode_dataset(std::string_view bytes, const std::string& what = "dataset") {
  io::ByteReader r(bytes, what);
  io::expect_magic(r, kDatasetMagic, what);
  const auto version = r.u32();
  if (version != kDatasetVersion) throw UnsupportedVersion(what + ": unsupported version " + std::to_string(version));
  LabeledDataset ds;
  const std::uint32_t n = r.u32(), m = r.u32(), s = r.u32();
  ds.side = s;
  for (std::uint32_t i = 0; i < m; ++i) ds.class_names.push_back(r.short_string());
  const std::uint64_t values = static_cast<std::uint64_t>(n) * 3 * s * s;
  if (values * 4 > r.remaining()) throw TruncatedFile(what + ": image block truncated");
  ds.images.resize(values);
  r.f32_array(ds.images);
  ds.labels.resize(n);
  for (auto& l : ds.labels) l = r.i32();
  const auto tag = r.u8();
  if (tag > 3) throw IntegrityError(what + ": unknown split tag " + std::to_string(tag));
  ds.split = static_cast<Split>(tag);
  if (r.remaining() != 0) throw IntegrityError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");

  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    const auto l = ds.labels[i];
    const bool ok = ds.split == Split::kSemanticOod ? l == kOodLabel : (l >= 0 && static_cast<std::uint32_t>(l) < m);
    if (!ok) {
      throw IntegrityError(what + ": label " + std::to_string(l) + " at index " + std::to_string(i) +
                           " inconsistent with " + std::to_string(m) + " classes and split " +
                           std::string(split_name(ds.split)));
    }
  }
  for (float v : ds.images) {
    if (!(v >= 0.0f && v <= 1.0f)) throw IntegrityError(what + ": pixel value outside [0,1]");
  }
  return ds;
}

inline void write_dataset(const LabeledDataset& ds, const std::string& path) { io::write_file(path, encode_dataset(ds)); }

inline LabeledDataset read_dataset(const std::string& path) { return decode_dataset(io::read_file(path), path); }

}  // namespace rpk

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

#include <cstdint>
#include <cstdio>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rpk/binary_io.hpp"
#include "rpk/encoders.hpp"
#include "rpk/errors.hpp"
#include "rpk/training.hpp"

namespace rpk {

using Json = nlohmann::json;

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"warmup_steps", c.warmup_steps},
              {"temperature", c.temperature},
              {"seed", c.seed},
              {"pad", c.pad},
              {"upsample_side", c.upsample_side},
              {"momentum", c.momentum},
              {"train_image", c.train_image},
              {"train_text", c.train_text},
              {"image_init", c.image_init == ImageInit::kZeros ? "zeros" : "uniform"},
              {"vocab_size", c.vocab_size},
              {"text_init_stddev", c.text_init_stddev}};
}

inline Json to_json(const EncoderSpec& s) {
  return Json{{"seed", s.seed},
              {"side", s.side},
              {"feature_width", s.feature_width},
              {"hidden_width", s.hidden_width},
              {"token_width", s.token_width}};
}

namespace json_detail {

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace json_detail

inline const std::set<std::string>& train_config_keys() {
  static const std::set<std::string> keys{"learning_rate", "batch_size",  "epochs",     "warmup_steps",
                                          "temperature",   "seed",        "pad",        "upsample_side",
                                          "momentum",      "train_image", "train_text", "image_init",
                                          "vocab_size",    "text_init_stddev"};
  return keys;
}

inline const std::set<std::string>& encoder_spec_keys() {
  static const std::set<std::string> keys{"seed", "side", "feature_width", "hidden_width", "token_width"};
  return keys;
}

// Overlays the keys present in `j` onto `c`; unknown keys are rejected.
inline void update_from_json(TrainConfig& c, const Json& j) {
  json_detail::reject_unknown(j, train_config_keys(), "train config");
  using json_detail::take;
  take(j, "learning_rate", c.learning_rate);
  take(j, "batch_size", c.batch_size);
  take(j, "epochs", c.epochs);
  take(j, "warmup_steps", c.warmup_steps);
  take(j, "temperature", c.temperature);
  take(j, "seed", c.seed);
  take(j, "pad", c.pad);
  take(j, "upsample_side", c.upsample_side);
  take(j, "momentum", c.momentum);
  take(j, "train_image", c.train_image);
  take(j, "train_text", c.train_text);
  take(j, "vocab_size", c.vocab_size);
  take(j, "text_init_stddev", c.text_init_stddev);
  if (j.contains("image_init")) {
    std::string init;
    take(j, "image_init", init);
    if (init == "zeros") c.image_init = ImageInit::kZeros;
    else if (init == "uniform") c.image_init = ImageInit::kUniform;
    else throw ConfigError("image_init must be 'zeros' or 'uniform', got '" + init + "'");
  }
}

inline void update_from_json(EncoderSpec& s, const Json& j) {
  json_detail::reject_unknown(j, encoder_spec_keys(), "encoder spec");
  using json_detail::take;
  take(j, "seed", s.seed);
  take(j, "side", s.side);
  take(j, "feature_width", s.feature_width);
  take(j, "hidden_width", s.hidden_width);
  take(j, "token_width", s.token_width);
}

// File layout (little-endian): "RPKM1" | u32 version | u32 header_len |
// header JSON | f32 W [3,d,d] | f32 theta [|V|,e] | f32 b [e]
inline constexpr std::string_view kModelMagic = "RPKM1";
inline constexpr std::uint32_t kModelVersion = 1;

namespace ckpt_detail {

inline std::vector<float> to_f32(const Tensor& t) {
  std::vector<float> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<float>(t[i]);
  return out;
}

inline Tensor read_section(io::ByteReader& r, const Json& shape_json) {
  Shape shape = shape_json.get<Shape>();
  std::vector<float> raw(element_count(shape));
  r.f32_array(raw);
  return Tensor(std::move(shape), std::vector<double>(raw.begin(), raw.end()));
}

}  // namespace ckpt_detail

inline std::string encode_checkpoint(const TrainedModel& model) {
  Json header;
  header["config"] = to_json(model.config);
  Json enc = to_json(model.encoders->spec());
  enc["hash"] = hex64(model.encoder_hash);
  header["encoder"] = enc;
  header["shapes"] = Json{{"W", model.image.weights().shape()},
                          {"theta", model.text.table().shape()},
                          {"b", model.text.bias().shape()}};
  header["vocabulary"] = model.text.vocabulary().tokens();
  header["class_names"] = model.class_names;
  header["steps"] = model.steps;
  const std::string text = header.dump();

  io::ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const Tensor* t : {&model.image.weights(), &model.text.table(), &model.text.bias()}) {
    w.f32_array(ckpt_detail::to_f32(*t));
  }
  return w.buffer();
}

// Rebuilds the toy encoder pair from the recorded spec and refuses to load if
// its weight hash differs from the one recorded at training time.
inline TrainedModel decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  io::ByteReader r(bytes, what);
  io::expect_magic(r, kModelMagic, what);
  const auto version = r.u32();
  if (version != kModelVersion) throw UnsupportedVersion(what + ": unsupported version " + std::to_string(version));
  const auto len = r.u32();
  Json header;
  try {
    header = Json::parse(r.bytes(len));
  } catch (const Json::exception& e) {
    throw IntegrityError(what + ": malformed header: " + e.what());
  }

  try {
    TrainConfig config;
    update_from_json(config, header.at("config"));
    EncoderSpec spec;
    Json enc = header.at("encoder");
    const std::string recorded_hash = enc.at("hash").get<std::string>();
    enc.erase("hash");
    update_from_json(spec, enc);

    TrainedModel model;
    model.encoders = std::make_shared<const EncoderPair>(EncoderPair::toy(spec));
    model.encoder_hash = model.encoders->weight_hash();
    if (hex64(model.encoder_hash) != recorded_hash) {
      throw IntegrityError(what + ": encoder hash " + hex64(model.encoder_hash) + " does not match recorded " + recorded_hash);
    }
    model.config = config;
    model.steps = header.at("steps").get<std::size_t>();
    model.class_names = header.at("class_names").get<std::vector<std::string>>();
    Vocabulary vocab(header.at("vocabulary").get<std::vector<std::string>>());

    const Json& shapes = header.at("shapes");
    Tensor w = ckpt_detail::read_section(r, shapes.at("W"));
    Tensor theta = ckpt_detail::read_section(r, shapes.at("theta"));
    Tensor b = ckpt_detail::read_section(r, shapes.at("b"));
    if (r.remaining() != 0) throw IntegrityError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");

    model.image = ImageReprogrammer(config.side(), config.pad, config.image_init);
    model.image.set_weights(std::move(w));
    model.zero_shot_text = TextReprogrammer::initial(vocab, spec.token_width, derive_seed(config.seed, kTextInitStream),
                                                     config.text_init_stddev);
    model.text = TextReprogrammer(std::move(vocab), std::move(theta), std::move(b));
    return model;
  } catch (const Json::exception& e) {
    throw IntegrityError(what + ": header missing or malformed field: " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(what + ": " + e.what());
  } catch (const ShapeError& e) {
    throw IntegrityError(what + ": " + e.what());
  }
}

inline void write_checkpoint(const TrainedModel& model, const std::string& path) {
  io::write_file(path, encode_checkpoint(model));
}

inline TrainedModel read_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path), path); }

}  // namespace rpk

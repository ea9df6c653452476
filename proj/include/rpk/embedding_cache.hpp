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
#include <string>
#include <unordered_set>
#include <vector>

#include "rpk/binary_io.hpp"
#include "rpk/errors.hpp"
#include "rpk/numerics/tensor.hpp"

namespace rpk {

enum class Modality : std::uint8_t { kImage = 0, kText = 1 };

// Per-sample feature rows keyed by id. File layout (little-endian):
//   "RPKE1" | u8 modality | u32 n | u32 k | n x { u16 id_len | id bytes | k x f32 }
struct EmbeddingCache {
  Modality modality = Modality::kImage;
  std::uint32_t width = 0;  // k
  std::vector<std::string> ids;
  std::vector<float> features;  // n x k, row-major

  std::size_t rows() const { return ids.size(); }

  void append(std::string id, std::span<const double> row) {
    if (ids.empty() && width == 0) width = static_cast<std::uint32_t>(row.size());
    if (row.size() != width) throw ShapeError("embedding row width " + std::to_string(row.size()) + " != k=" + std::to_string(width));
    ids.push_back(std::move(id));
    for (double v : row) features.push_back(static_cast<float>(v));
  }

  friend bool operator==(const EmbeddingCache&, const EmbeddingCache&) = default;
};

inline constexpr std::string_view kEmbeddingMagic = "RPKE1";

inline std::string encode_embedding_cache(const EmbeddingCache& cache) {
  if (cache.features.size() != cache.ids.size() * cache.width) {
    throw IntegrityError("embedding cache: " + std::to_string(cache.features.size()) + " values for " +
                         std::to_string(cache.ids.size()) + " rows of width " + std::to_string(cache.width));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : cache.ids) {
    if (!seen.insert(id).second) throw DuplicateId("embedding cache: duplicate id '" + id + "'");
  }
  io::ByteWriter w;
  w.bytes(kEmbeddingMagic);
  w.u8(static_cast<std::uint8_t>(cache.modality));
  w.u32(static_cast<std::uint32_t>(cache.ids.size()));
  w.u32(cache.width);
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    w.short_string(cache.ids[i]);
    w.f32_array(std::span<const float>(cache.features).subspan(i * cache.width, cache.width));
  }
  return w.buffer();
}

inline EmbeddingCache decode_embedding_cache(std::string_view bytes, const std::string& what = "embedding cache") {
  io::ByteReader r(bytes, what);
  io::expect_magic(r, kEmbeddingMagic, what);
  EmbeddingCache cache;
  const auto modality = r.u8();
  if (modality > 1) throw IntegrityError(what + ": unknown modality tag " + std::to_string(modality));
  cache.modality = static_cast<Modality>(modality);
  const std::uint32_t n = r.u32();
  cache.width = r.u32();
  std::unordered_set<std::string> seen;
  cache.ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.short_string();
    if (!seen.insert(id).second) throw DuplicateId(what + ": duplicate id '" + id + "'");
    cache.ids.push_back(std::move(id));
    const std::size_t offset = cache.features.size();
    cache.features.resize(offset + cache.width);
    r.f32_array(std::span<float>(cache.features).subspan(offset, cache.width));
  }
  if (r.remaining() != 0) throw IntegrityError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return cache;
}

inline void write_embedding_cache(const EmbeddingCache& cache, const std::string& path) {
  io::write_file(path, encode_embedding_cache(cache));
}

inline EmbeddingCache read_embedding_cache(const std::string& path) {
  return decode_embedding_cache(io::read_file(path), path);
}

}  // namespace rpk

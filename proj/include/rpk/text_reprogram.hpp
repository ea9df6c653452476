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

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rpk/binary_io.hpp"
#include "rpk/errors.hpp"
#include "rpk/numerics/ops.hpp"
#include "rpk/rng.hpp"

namespace rpk {

inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kCaptionPrefix = "a photo of a ";

// Ordered token list; the line/position of a token is its index.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], i).second) throw ConfigError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }

  // 0 (the <unk> slot) for unknown words.
  std::size_t index_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? 0 : it->second;
  }
  bool contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u >= 0x80 || std::isalnum(u)) {
      cur.push_back(static_cast<char>(u >= 0x80 ? ch : std::tolower(u)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Lower-cased, split on whitespace and ASCII punctuation, unknown words -> 0.
inline std::vector<std::size_t> tokenize(std::string_view text, const Vocabulary& vocab) {
  if (vocab.size() == 0 || vocab.token(0) != kUnknownToken) {
    throw ConfigError("tokenize: vocabulary must hold <unk> at index 0");
  }
  std::vector<std::size_t> out;
  for (const auto& w : split_words(text)) out.push_back(vocab.index_of(w));
  return out;
}

inline std::string detokenize(std::span<const std::size_t> tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(tokens[i]);
  }
  return out;
}

inline std::string caption_for_class(std::string_view class_name) {
  if (class_name.empty()) throw ConfigError("caption_for_class: empty class name");
  return std::string(kCaptionPrefix) + std::string(class_name);
}

struct Caption {
  std::string text;
  std::vector<std::size_t> tokens;
  int class_id = -1;
};

inline Caption make_caption(std::string_view class_name, int class_id, const Vocabulary& vocab) {
  Caption c;
  c.text = caption_for_class(class_name);
  c.tokens = tokenize(c.text, vocab);
  c.class_id = class_id;
  return c;
}

// <unk>, the template words, then class-name words in first-seen order.
// Padded with reserved placeholder tokens up to `min_size` (e.g. 49408 to
// mirror a CLIP-sized table).
inline Vocabulary build_vocabulary(const std::vector<std::string>& class_names, std::size_t min_size = 0) {
  std::vector<std::string> tokens{std::string(kUnknownToken)};
  std::unordered_map<std::string, bool> seen{{tokens[0], true}};
  auto add = [&](std::string_view text) {
    for (auto& w : split_words(text)) {
      if (seen.emplace(w, true).second) tokens.push_back(std::move(w));
    }
  };
  add(kCaptionPrefix);
  for (const auto& name : class_names) add(name);
  for (std::size_t i = 0; tokens.size() < min_size; ++i) tokens.push_back("<reserved-" + std::to_string(i) + ">");
  return Vocabulary(std::move(tokens));
}

// UTF-8, one token per line.
inline void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::string out;
  for (const auto& t : vocab.tokens()) {
    if (t.find('\n') != std::string::npos) throw ConfigError("vocabulary token contains a newline");
    out += t;
    out.push_back('\n');
  }
  io::write_file(path, out);
}

inline Vocabulary read_vocabulary(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return Vocabulary(std::move(tokens));
}

// Phi_{theta,b}: rows of the token table plus a shared bias row.
class TextReprogrammer {
 public:
  TextReprogrammer() = default;

  TextReprogrammer(Vocabulary vocab, Tensor table, Tensor bias)
      : vocab_(std::move(vocab)), table_(std::move(table)), bias_(std::move(bias)) {
    if (table_.rank() != 2 || table_.dim(0) != vocab_.size()) {
      throw ShapeError("TextReprogrammer: table shape " + to_string(table_.shape()) + " does not fit a vocabulary of " +
                       std::to_string(vocab_.size()));
    }
    if (bias_.rank() != 1 || bias_.dim(0) != table_.dim(1)) {
      throw ShapeError("TextReprogrammer: bias shape " + to_string(bias_.shape()) + " vs table " + to_string(table_.shape()));
    }
  }

  // theta ~ N(0, 0.02^2) from `seed`, b = 0.
  static TextReprogrammer initial(Vocabulary vocab, std::size_t width, std::uint64_t seed, double stddev = 0.02) {
    Rng rng(seed);
    Tensor table(Shape{vocab.size(), width});
    for (double& v : table.data()) v = rng.normal(0.0, stddev);
    return TextReprogrammer(std::move(vocab), std::move(table), Tensor(Shape{width}, 0.0));
  }

  const Vocabulary& vocabulary() const { return vocab_; }
  std::size_t width() const { return table_.dim(1); }
  const Tensor& table() const { return table_; }
  const Tensor& bias() const { return bias_; }
  Tensor& table() { return table_; }
  Tensor& bias() { return bias_; }

  void check_tokens(std::span<const std::size_t> tokens) const {
    for (auto t : tokens) {
      if (t >= vocab_.size()) {
        throw ShapeError("token index " + std::to_string(t) + " outside vocabulary of size " + std::to_string(vocab_.size()));
      }
    }
  }

  // [|tokens|, e]: row i = table[tokens[i]] + bias.
  ad::Var apply(const ad::Var& table, const ad::Var& bias, std::span<const std::size_t> tokens) const {
    check_tokens(tokens);
    return ad::add_row(ad::gather_rows(table, std::vector<std::size_t>(tokens.begin(), tokens.end())), bias);
  }

  Tensor apply(std::span<const std::size_t> tokens) const {
    ad::Tape tape;
    return apply(tape.constant(table_), tape.constant(bias_), tokens).value();
  }

 private:
  Vocabulary vocab_;
  Tensor table_;
  Tensor bias_;
};

}  // namespace rpk

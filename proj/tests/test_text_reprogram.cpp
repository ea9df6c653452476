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

#include <gtest/gtest.h>

#include "rpk/encoders.hpp"
#include "rpk/numerics/grad_check.hpp"
#include "rpk/text_reprogram.hpp"
#include "test_util.hpp"

namespace rpk {
namespace {

using ad::Tape;
using ad::Var;
using testing::random_tensor;

Vocabulary toy_vocab() { return Vocabulary({"<unk>", "a", "photo", "of", "cat"}); }

TEST(Caption, Template) {
  EXPECT_EQ(caption_for_class("Labrador Retriever"), "a photo of a Labrador Retriever");
  EXPECT_THROW(caption_for_class(""), ConfigError);
}

TEST(Tokenize, ToyVocabulary) {
  const Vocabulary v = toy_vocab();
  EXPECT_EQ(tokenize("a photo of a cat", v), (std::vector<std::size_t>{1, 2, 3, 1, 4}));
  EXPECT_EQ(tokenize("a photo of a dog", v), (std::vector<std::size_t>{1, 2, 3, 1, 0}));
  EXPECT_TRUE(tokenize("", v).empty());
}

TEST(Tokenize, DetokenizeIsIdempotent) {
  const Vocabulary v = toy_vocab();
  for (const char* text : {"a photo of a cat", "a   photo of a zebra", "cat cat"}) {
    const auto t = tokenize(text, v);
    const std::string once = detokenize(t, v);
    EXPECT_EQ(tokenize(once, v), t);
    EXPECT_EQ(detokenize(tokenize(once, v), v), once);
  }
}

TEST(Tokenize, BuiltVocabularyCoversCaptions) {
  const std::vector<std::string> names{"golden retriever", "tabby", "sports car"};
  const Vocabulary v = build_vocabulary(names, 64);
  EXPECT_EQ(v.size(), 64u);
  EXPECT_EQ(v.token(0), kUnknownToken);
  for (std::size_t c = 0; c < names.size(); ++c) {
    const Caption cap = make_caption(names[c], static_cast<int>(c), v);
    for (auto t : cap.tokens) EXPECT_NE(t, 0u);
  }
}

TEST(Vocabulary, FileRoundTrip) {
  testing::TempDir dir;
  const Vocabulary v = build_vocabulary({"red", "blue"}, 10);
  write_vocabulary(v, dir.file("v.txt"));
  EXPECT_EQ(read_vocabulary(dir.file("v.txt")), v);
}

TEST(Phi, ZeroTableGivesZeroRows) {
  const TextReprogrammer phi(toy_vocab(), Tensor(Shape{5, 7}, 0.0), Tensor(Shape{7}, 0.0));
  const std::vector<std::size_t> toks{1, 2, 3, 1, 4};
  for (double v : phi.apply(toks).data()) EXPECT_EQ(v, 0.0);
}

TEST(Phi, SingleTokenIsRowPlusBias) {
  Rng rng(1);
  const TextReprogrammer phi(toy_vocab(), random_tensor(rng, {5, 6}), random_tensor(rng, {6}));
  for (std::size_t t = 0; t < 5; ++t) {
    const std::vector<std::size_t> toks{t};
    const Tensor out = phi.apply(toks);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(out[j], phi.table().at(t, j) + phi.bias()[j]);
  }
}

TEST(Phi, InitialDistribution) {
  const auto phi = TextReprogrammer::initial(build_vocabulary({"x"}, 512), 64, 3);
  double s = 0, s2 = 0;
  for (double v : phi.table().data()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(phi.table().size());
  EXPECT_NEAR(s / n, 0.0, 1e-3);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.02, 1e-3);
  for (double v : phi.bias().data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(TextReprogrammer::initial(build_vocabulary({"x"}, 512), 64, 3).table(), phi.table());
}

TEST(Phi, OutOfRangeToken) {
  const auto phi = TextReprogrammer::initial(toy_vocab(), 4, 0);
  const std::vector<std::size_t> toks{1, 5};
  EXPECT_THROW(phi.apply(toks), ShapeError);
}

TEST(Phi, ShapeChecks) {
  EXPECT_THROW(TextReprogrammer(toy_vocab(), Tensor(Shape{4, 3}, 0.0), Tensor(Shape{3}, 0.0)), ShapeError);
  EXPECT_THROW(TextReprogrammer(toy_vocab(), Tensor(Shape{5, 3}, 0.0), Tensor(Shape{4}, 0.0)), ShapeError);
}

TEST(Phi, BiasGradientCountsTokens) {
  Rng rng(2);
  const auto phi = TextReprogrammer::initial(toy_vocab(), 6, 2);
  const std::vector<std::size_t> toks{1, 2, 3, 1, 4};
  Tape tape;
  const Var th = tape.parameter("theta", phi.table()), b = tape.parameter("b", phi.bias());
  const auto g = ad::backward(ad::sum(phi.apply(th, b, toks)));
  for (double v : g.at("b").data()) EXPECT_EQ(v, 5.0);
  // Row 1 occurs twice, row 0 never.
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(g.at("theta").at(0, j), 0.0);
    EXPECT_EQ(g.at("theta").at(1, j), 2.0);
    EXPECT_EQ(g.at("theta").at(4, j), 1.0);
  }
}

TEST(Phi, UnreferencedRowsGetZeroGradientThroughEncoder) {
  const EncoderPair enc = toy_encoder_pair(5, 8, 6, 5, 6);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const TextReprogrammer phi(toy_vocab(), random_tensor(rng, {5, 6}), random_tensor(rng, {6}));
    std::vector<std::size_t> toks;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) toks.push_back(1 + rng.below(3));  // never 0 or 4
    Tape tape;
    const Var th = tape.parameter("theta", phi.table()), b = tape.parameter("b", phi.bias());
    const auto g = ad::backward(ad::sum(ad::tanh(enc.encode_text(tape, phi.apply(th, b, toks), {toks.size()}))));
    for (std::size_t j = 0; j < 6; ++j) {
      ASSERT_EQ(g.at("theta").at(0, j), 0.0);
      ASSERT_EQ(g.at("theta").at(4, j), 0.0);
    }
  }
}

TEST(Phi, RowsAreIndependent) {
  Rng rng(3);
  TextReprogrammer phi(toy_vocab(), random_tensor(rng, {5, 6}), random_tensor(rng, {6}));
  const std::vector<std::size_t> toks{1, 2, 3};
  const Tensor before = phi.apply(toks);
  for (std::size_t j = 0; j < 6; ++j) phi.table().at(4, j) += 10.0;
  EXPECT_EQ(phi.apply(toks), before);
  for (std::size_t j = 0; j < 6; ++j) phi.table().at(2, j) += 1.0;
  const Tensor after = phi.apply(toks);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(after.at(0, j), before.at(0, j));
    EXPECT_NE(after.at(1, j), before.at(1, j));
    EXPECT_EQ(after.at(2, j), before.at(2, j));
  }
}

TEST(Phi, PipelineGradient) {
  const EncoderPair enc = toy_encoder_pair(4, 8, 6, 5, 6);
  const std::vector<std::size_t> toks{1, 2, 3, 1, 4};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const TextReprogrammer phi(toy_vocab(), random_tensor(rng, {5, 6}), random_tensor(rng, {6}));
    const ad::ScalarFn fn = [&](Tape& tape, std::span<const Var> v) {
      return ad::sum(ad::tanh(enc.encode_text(tape, phi.apply(v[0], v[1], toks), {toks.size()})));
    };
    EXPECT_LT(ad::grad_check(fn, {{"theta", phi.table()}, {"b", phi.bias()}}, 1e-6), 1e-5) << seed;
  }
}

}  // namespace
}  // namespace rpk

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

#include <cmath>
#include <functional>
#include <limits>

#include "rpk/numerics/grad_check.hpp"
#include "rpk/numerics/ops.hpp"
#include "rpk/rng.hpp"
#include "rpk/training.hpp"
#include "test_util.hpp"

namespace rpk {
namespace {

using ad::Parameter;
using ad::Tape;
using ad::Var;
using testing::random_tensor;

constexpr double kStep = 1e-6;
constexpr double kTol = 1e-5;
constexpr int kSeeds = 100;

// sum(y * R) for a fixed random R, so every output entry carries a distinct weight.
Var weighted_sum(Tape& tape, const Var& y, std::uint64_t seed) {
  Rng rng(seed ^ 0xabcdef);
  return ad::sum(ad::mul(y, tape.constant(random_tensor(rng, y.shape()))));
}

std::size_t small(Rng& rng, std::size_t lo = 1, std::size_t hi = 5) { return lo + rng.below(hi - lo + 1); }

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(element_count(Shape{}), 1u);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_THROW(t.item(), ShapeError);
}

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::vector({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

TEST(Forward, TanhOfZeroIsZero) {
  Tape tape;
  const Var y = ad::tanh(tape.constant(Tensor(Shape{2, 3}, 0.0)));
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, NormalizeThreeFour) {
  Tape tape;
  const Var y = ad::l2_normalize_rows(tape.constant(Tensor::vector({3.0, 4.0})));
  EXPECT_NEAR(y.value()[0], 0.6, 1e-15);
  EXPECT_NEAR(y.value()[1], 0.8, 1e-15);
}

TEST(Forward, CosineWithSelfIsOne) {
  Tape tape;
  const Var u = tape.constant(Tensor::vector({0.3, -1.2, 2.5}));
  EXPECT_NEAR(ad::cosine_similarity(u, u).value().item(), 1.0, 1e-15);
}

TEST(Forward, ShapeMismatchNamesBothShapes) {
  Tape tape;
  const Var a = tape.constant(Tensor(Shape{2, 3}, 1.0));
  const Var b = tape.constant(Tensor(Shape{3, 2}, 1.0));
  try {
    ad::add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(to_string(Shape{2, 3})), std::string::npos) << msg;
    EXPECT_NE(msg.find(to_string(Shape{3, 2})), std::string::npos) << msg;
  }
  EXPECT_THROW(ad::matmul(tape.constant(Tensor(Shape{2, 3}, 1.0)), tape.constant(Tensor(Shape{2, 3}, 1.0))), ShapeError);
}

TEST(Forward, ZeroNormRowIsAnError) {
  Tape tape;
  EXPECT_THROW(ad::l2_normalize_rows(tape.constant(Tensor(Shape{2, 3}, 0.0))), NumericError);
}

TEST(Forward, RepeatedRunsAreBitIdentical) {
  Rng rng(3);
  const Tensor a = random_tensor(rng, {4, 5}), b = random_tensor(rng, {5, 3});
  auto run = [&] {
    Tape tape;
    return ad::l2_normalize_rows(ad::tanh(ad::matmul(tape.constant(a), tape.constant(b)))).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, SumTanhAtZeroIsOnes) {
  Tape tape;
  const Var x = tape.parameter("x", Tensor(Shape{4}, 0.0));
  const auto g = ad::backward(ad::sum(ad::tanh(x)));
  for (double v : g.at("x").data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Backward, CosineSelfSimilarityHasZeroGradient) {
  Tape tape;
  const Var u = tape.parameter("u", Tensor::vector({0.5, -1.0, 2.0}));
  const auto g = ad::backward(ad::cosine_similarity(u, u));
  for (double v : g.at("u").data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Backward, NonScalarOutputIsAnError) {
  Tape tape;
  const Var x = tape.parameter("x", Tensor(Shape{3}, 1.0));
  EXPECT_THROW(ad::backward(ad::tanh(x)), ShapeError);
}

TEST(Backward, ConstantsGetNoEntryAndUnusedParametersGetZeros) {
  Tape tape;
  const Var x = tape.parameter("x", Tensor::vector({1.0, 2.0}));
  const Var unused = tape.parameter("unused", Tensor::vector({5.0, 6.0, 7.0}));
  const Var c = tape.constant(Tensor::vector({3.0, 4.0}));
  const auto g = ad::backward(ad::sum(ad::mul(x, c)));
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.count("x"), 1u);
  EXPECT_EQ(g.at("x"), Tensor::vector({3.0, 4.0}));
  EXPECT_EQ(g.at("unused"), Tensor(Shape{3}, 0.0));
  EXPECT_EQ(g.at("unused").shape(), unused.shape());
}

TEST(Backward, DuplicateParameterIdIsRejected) {
  Tape tape;
  tape.parameter("w", Tensor::scalar(1.0));
  EXPECT_THROW(tape.parameter("w", Tensor::scalar(2.0)), ConfigError);
}

TEST(Backward, OperandsFromAnotherTapeAreRejected) {
  Tape t1, t2;
  const Var a = t1.constant(Tensor::scalar(1.0));
  const Var b = t2.constant(Tensor::scalar(1.0));
  EXPECT_THROW(ad::add(a, b), ConfigError);
}

TEST(Backward, VisitsEachNodeOnceInReverseOrder) {
  Tape tape;
  const Var x = tape.parameter("x", Tensor::vector({0.1, 0.2, 0.3}));
  const Var y = ad::tanh(x);
  const Var out = ad::sum(ad::add(ad::mul(y, y), ad::scale(x, 2.0)));
  std::vector<std::size_t> order;
  ad::backward(out, &order);
  ASSERT_FALSE(order.empty());
  EXPECT_EQ(order.front(), out.id());
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LT(order[i], order[i - 1]);
}

TEST(Backward, IsLinearInTheOutput) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const Tensor x0 = random_tensor(rng, {3, 4});
    const Tensor w0 = random_tensor(rng, {4, 2});
    auto f1 = [](const Var& x, const Var& w) { return ad::sum(ad::tanh(ad::matmul(x, w))); };
    auto f2 = [](const Var& x, const Var&) { return ad::sum(ad::l2_normalize_rows(x)); };
    auto grads = [&](int which) {
      Tape tape;
      const Var x = tape.parameter("x", x0), w = tape.parameter("w", w0);
      const Var out = which == 0 ? ad::add(f1(x, w), f2(x, w)) : which == 1 ? f1(x, w) : f2(x, w);
      return ad::backward(out);
    };
    const auto both = grads(0), a = grads(1), b = grads(2);
    for (const char* id : {"x", "w"}) {
      for (std::size_t i = 0; i < both.at(id).size(); ++i) {
        EXPECT_NEAR(both.at(id)[i], a.at(id)[i] + b.at(id)[i], 1e-12);
      }
    }
  }
}

TEST(Backward, GatherLeavesUntouchedRowsExactlyZero) {
  Rng rng(11);
  Tape tape;
  const Var table = tape.parameter("theta", random_tensor(rng, {6, 3}));
  const Var rows = ad::gather_rows(table, {1, 4, 1});
  const auto g = ad::backward(weighted_sum(tape, rows, 11));
  for (std::size_t r : {0u, 2u, 3u, 5u})
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g.at("theta").at(r, c), 0.0);
}

TEST(Backward, GatherOutOfRangeIsAnError) {
  Tape tape;
  const Var table = tape.constant(Tensor(Shape{3, 2}, 1.0));
  EXPECT_THROW(ad::gather_rows(table, {0, 3}), ShapeError);
}

TEST(GradCheck, QuadraticIsExact) {
  const ad::ScalarFn f = [](Tape&, std::span<const Var> v) { return ad::sum(ad::mul(v[0], v[0])); };
  EXPECT_LT(ad::grad_check(f, {Parameter{"w", Tensor::vector({1.0, 2.0})}}, kStep), 1e-8);
}

TEST(GradCheck, RejectsNonPositiveStep) {
  const ad::ScalarFn f = [](Tape&, std::span<const Var> v) { return ad::sum(v[0]); };
  EXPECT_THROW(ad::grad_check(f, {Parameter{"w", Tensor::vector({1.0})}}, 0.0), ConfigError);
  EXPECT_THROW(ad::grad_check(f, {Parameter{"w", Tensor::vector({1.0})}}, -1e-6), ConfigError);
}

TEST(GradCheck, NonFiniteValueIsAnError) {
  const ad::ScalarFn f = [](Tape& tape, std::span<const Var> v) {
    return ad::sum(ad::mul(v[0], tape.constant(Tensor::vector({std::numeric_limits<double>::infinity()}))));
  };
  EXPECT_THROW(ad::grad_check(f, {Parameter{"w", Tensor::vector({-1.0})}}, kStep), NumericError);
}

TEST(GradCheck, FrozenInputsAreNotReported) {
  Tape tape;
  const Var w = tape.parameter("W", Tensor::vector({0.1, 0.2}));
  const Var frozen = tape.constant(Tensor::vector({1.0, -1.0}));
  const auto g = ad::backward(ad::sum(ad::tanh(ad::mul(w, frozen))));
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g.count("W"), 1u);
}

TEST(GradCheck, SymmetricLossOnTwoPairs) {
  const ad::ScalarFn f = [](Tape&, std::span<const Var> v) { return symmetric_ce_loss(v[0], v[1], 3.0); };
  Rng rng(5);
  const double err = ad::grad_check(
      f, {Parameter{"img", random_tensor(rng, {2, 4})}, Parameter{"txt", random_tensor(rng, {2, 4})}}, kStep);
  EXPECT_LT(err, kTol);
}

// Per-op finite-difference checks over kSeeds random configurations.
struct OpCase {
  const char* name;
  std::function<std::pair<ad::ScalarFn, std::vector<Parameter>>(Rng&, std::uint64_t)> make;
};

std::vector<OpCase> op_cases() {
  std::vector<OpCase> cases;
  cases.push_back({"add", [](Rng& rng, std::uint64_t s) {
                     const Shape sh{small(rng), small(rng)};
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::add(v[0], v[1]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, sh)}, {"b", random_tensor(rng, sh)}}};
                   }});
  cases.push_back({"sub", [](Rng& rng, std::uint64_t s) {
                     const Shape sh{small(rng), small(rng)};
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::sub(v[0], v[1]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, sh)}, {"b", random_tensor(rng, sh)}}};
                   }});
  cases.push_back({"mul", [](Rng& rng, std::uint64_t s) {
                     const Shape sh{small(rng), small(rng)};
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::mul(v[0], v[1]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, sh)}, {"b", random_tensor(rng, sh)}}};
                   }});
  cases.push_back({"scale", [](Rng& rng, std::uint64_t s) {
                     const double k = rng.uniform(-3, 3);
                     return std::pair{ad::ScalarFn([s, k](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::scale(v[0], k), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng)})}}};
                   }});
  cases.push_back({"tanh", [](Rng& rng, std::uint64_t s) {
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::tanh(v[0]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng)}, -2, 2)}}};
                   }});
  cases.push_back({"reshape", [](Rng& rng, std::uint64_t s) {
                     const std::size_t r = small(rng), c = small(rng);
                     return std::pair{ad::ScalarFn([s, r, c](Tape& t, std::span<const Var> v) {
                                        return weighted_sum(t, ad::tanh(ad::reshape(v[0], {c, r})), s);
                                      }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {r, c})}}};
                   }});
  cases.push_back({"matmul", [](Rng& rng, std::uint64_t s) {
                     const std::size_t n = small(rng), p = small(rng), q = small(rng);
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::matmul(v[0], v[1]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {n, p})}, {"b", random_tensor(rng, {p, q})}}};
                   }});
  cases.push_back({"transpose", [](Rng& rng, std::uint64_t s) {
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::transpose(v[0]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng)})}}};
                   }});
  cases.push_back({"add_row", [](Rng& rng, std::uint64_t s) {
                     const std::size_t n = small(rng), k = small(rng);
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::add_row(v[0], v[1]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {n, k})}, {"row", random_tensor(rng, {k})}}};
                   }});
  cases.push_back({"gather_rows", [](Rng& rng, std::uint64_t s) {
                     const std::size_t rows = small(rng, 2, 6), k = small(rng);
                     std::vector<std::size_t> idx(small(rng, 1, 8));
                     for (auto& i : idx) i = rng.below(rows);
                     return std::pair{ad::ScalarFn([s, idx](Tape& t, std::span<const Var> v) {
                                        return weighted_sum(t, ad::gather_rows(v[0], idx), s);
                                      }),
                                      std::vector<Parameter>{{"table", random_tensor(rng, {rows, k})}}};
                   }});
  cases.push_back({"segment_mean", [](Rng& rng, std::uint64_t s) {
                     std::vector<std::size_t> lengths(small(rng, 1, 4));
                     std::size_t total = 0;
                     for (auto& l : lengths) total += (l = small(rng, 1, 4));
                     return std::pair{ad::ScalarFn([s, lengths](Tape& t, std::span<const Var> v) {
                                        return weighted_sum(t, ad::segment_mean(v[0], lengths), s);
                                      }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {total, small(rng)})}}};
                   }});
  cases.push_back({"sum", [](Rng& rng, std::uint64_t) {
                     return std::pair{ad::ScalarFn([](Tape&, std::span<const Var> v) { return ad::sum(ad::mul(v[0], v[0])); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng)})}}};
                   }});
  cases.push_back({"sum_rows", [](Rng& rng, std::uint64_t s) {
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) { return weighted_sum(t, ad::sum_rows(v[0]), s); }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng)})}}};
                   }});
  cases.push_back({"l2_normalize_rows", [](Rng& rng, std::uint64_t s) {
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) {
                                        return weighted_sum(t, ad::l2_normalize_rows(v[0]), s);
                                      }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, {small(rng), small(rng, 2, 5)})}}};
                   }});
  cases.push_back({"cosine_similarity", [](Rng& rng, std::uint64_t s) {
                     const Shape sh{small(rng), small(rng, 2, 5)};
                     return std::pair{ad::ScalarFn([s](Tape& t, std::span<const Var> v) {
                                        return weighted_sum(t, ad::cosine_similarity(v[0], v[1]), s);
                                      }),
                                      std::vector<Parameter>{{"a", random_tensor(rng, sh)}, {"b", random_tensor(rng, sh)}}};
                   }});
  cases.push_back({"softmax_cross_entropy", [](Rng& rng, std::uint64_t) {
                     const std::size_t n = small(rng), m = small(rng, 2, 6);
                     std::vector<std::size_t> targets(n);
                     for (auto& t : targets) t = rng.below(m);
                     return std::pair{ad::ScalarFn([targets](Tape&, std::span<const Var> v) {
                                        return ad::softmax_cross_entropy(v[0], targets);
                                      }),
                                      std::vector<Parameter>{{"logits", random_tensor(rng, {n, m}, -4, 4)}}};
                   }});
  return cases;
}

class PrimitiveGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const OpCase c = op_cases()[GetParam()];
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(seed), GetParam()));
    auto [fn, params] = c.make(rng, static_cast<std::uint64_t>(seed));
    EXPECT_LT(ad::grad_check(fn, params, kStep), kTol) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, PrimitiveGradient, ::testing::Range<std::size_t>(0, 16),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return std::string(op_cases()[info.param].name);
                         });

TEST(Rng, SeedDeterminismAndRanges) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.below(7), 7u);
    b.below(7);
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(9);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

}  // namespace
}  // namespace rpk

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
#include <limits>

#include "rpk/datagen.hpp"
#include "rpk/training.hpp"
#include "test_util.hpp"

namespace rpk {
namespace {

using testing::random_tensor;

TEST(Schedule, Endpoints) {
  const CosineWarmupSchedule s{0.1, 10, 100};
  EXPECT_EQ(s.lr_at(0), 0.0);
  EXPECT_DOUBLE_EQ(s.lr_at(10), 0.1);
  EXPECT_NEAR(s.lr_at(100), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.lr_at(5), 0.05);
  EXPECT_NEAR(s.lr_at(55), 0.05, 1e-15);
  EXPECT_THROW(static_cast<void>(s.lr_at(101)), ConfigError);
}

TEST(Schedule, RampThenDecayShape) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t warmup = rng.below(20), total = warmup + 1 + rng.below(200);
    const CosineWarmupSchedule s{rng.uniform(1e-4, 1.0), warmup, total};
    for (std::size_t t = 1; t <= total; ++t) {
      if (t <= warmup) {
        ASSERT_GT(s.lr_at(t), s.lr_at(t - 1));
      } else {
        ASSERT_LE(s.lr_at(t), s.lr_at(t - 1));
      }
      ASSERT_GE(s.lr_at(t), 0.0);
      ASSERT_LE(s.lr_at(t), s.base_lr * (1 + 1e-15));
    }
  }
}

TEST(Schedule, NoDecayPhase) {
  const CosineWarmupSchedule s{0.5, 4, 4};
  EXPECT_EQ(s.lr_at(2), 0.25);
  EXPECT_EQ(s.lr_at(4), 0.0);
}

TEST(Loss, SinglePairIsZero) {
  Rng rng(2);
  EXPECT_NEAR(symmetric_ce_loss(random_tensor(rng, {1, 5}), random_tensor(rng, {1, 5}), 100.0), 0.0, 1e-15);
}

TEST(Loss, OrthonormalPairsLargeTemperature) {
  Tensor eye(Shape{4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 2.0;
  EXPECT_LT(symmetric_ce_loss(eye, eye, 100.0), 1e-40);
  EXPECT_GT(symmetric_ce_loss(eye, eye, 1.0), 0.1);
}

TEST(Loss, TwoByTwoHandOracle) {
  const Tensor f = Tensor::matrix(2, 2, {3, 0, 0, 0.5});
  const Tensor g = Tensor::matrix(2, 2, {1, 0, 0.6, 0.8});
  const double tau = 2.0;
  // cos-sim logits: [[1, 0.6], [0, 0.8]] * tau
  const double l00 = tau, l01 = 0.6 * tau, l10 = 0.0, l11 = 0.8 * tau;
  auto ce = [](double target, double other) { return -target + std::log(std::exp(target) + std::exp(other)); };
  const double rows = 0.5 * (ce(l00, l01) + ce(l11, l10));
  const double cols = 0.5 * (ce(l00, l10) + ce(l11, l01));
  EXPECT_NEAR(symmetric_ce_loss(f, g, tau), 0.5 * (rows + cols), 1e-14);
}

TEST(Loss, ZeroRowIsAnError) {
  const Tensor f = Tensor::matrix(2, 2, {1, 0, 0, 0});
  EXPECT_THROW(symmetric_ce_loss(f, Tensor::matrix(2, 2, {1, 0, 0, 1}), 1.0), NumericError);
  EXPECT_THROW(symmetric_ce_loss(f, Tensor::matrix(1, 2, {1, 0}), 1.0), ShapeError);
}

struct Fixture {
  LabeledDataset train = gen_id(3, 40, 4, 8);
  std::shared_ptr<const EncoderPair> enc = std::make_shared<EncoderPair>(toy_encoder_pair(5, 12, 16, 8, 8));
  TrainConfig config = [] {
    TrainConfig c;
    c.pad = 2;
    c.upsample_side = 8;
    c.batch_size = 8;
    c.epochs = 2;
    c.warmup_steps = 2;
    c.learning_rate = 0.05;
    c.seed = 11;
    return c;
  }();
};

TEST(Fit, ZeroEpochsKeepsInitialisation) {
  Fixture fx;
  fx.config.epochs = 0;
  fx.config.image_init = ImageInit::kUniform;
  const TrainedModel init = initial_model(fx.enc, fx.train.class_names, fx.config);
  const TrainedModel m = fit(fx.train, fx.enc, fx.config);
  EXPECT_EQ(m.image.weights(), init.image.weights());
  EXPECT_EQ(m.text.table(), init.text.table());
  EXPECT_EQ(m.text.bias(), init.text.bias());
  EXPECT_TRUE(m.loss_history.empty());
}

TEST(Fit, LossDropsAndEncoderStaysFrozen) {
  Fixture fx;
  const std::uint64_t hash = fx.enc->weight_hash();
  const TrainedModel m = fit(fx.train, fx.enc, fx.config);
  ASSERT_EQ(m.loss_history.size(), 10u);
  double late = 0;
  for (std::size_t i = 5; i < 10; ++i) late += m.loss_history[i];
  EXPECT_LT(late / 5, m.loss_history[0]);
  EXPECT_EQ(fx.enc->weight_hash(), hash);
  EXPECT_EQ(m.encoder_hash, hash);
  EXPECT_NE(m.image.weights(), Tensor(m.image.weights().shape(), 0.0));
}

TEST(Fit, OnlyBorderWeightsMove) {
  Fixture fx;
  const TrainedModel m = fit(fx.train, fx.enc, fx.config);
  for (std::size_t i = 0; i < m.image.weights().size(); ++i) {
    if (m.image.mask()[i] == 0.0) {
      ASSERT_EQ(m.image.weights()[i], 0.0);
    }
  }
}

TEST(Fit, FrozenFlags) {
  Fixture fx;
  fx.config.train_text = false;
  const TrainedModel init = initial_model(fx.enc, fx.train.class_names, fx.config);
  TrainedModel m = fit(fx.train, fx.enc, fx.config);
  EXPECT_EQ(m.text.table(), init.text.table());
  EXPECT_EQ(m.text.bias(), init.text.bias());
  fx.config.train_text = true;
  fx.config.train_image = false;
  m = fit(fx.train, fx.enc, fx.config);
  EXPECT_EQ(m.image.weights(), init.image.weights());
  EXPECT_NE(m.text.table(), init.text.table());
}

TEST(Fit, Deterministic) {
  Fixture fx;
  const TrainedModel a = fit(fx.train, fx.enc, fx.config), b = fit(fx.train, fx.enc, fx.config);
  EXPECT_EQ(a.image.weights(), b.image.weights());
  EXPECT_EQ(a.text.table(), b.text.table());
  EXPECT_EQ(a.loss_history, b.loss_history);
  fx.config.seed = 12;
  EXPECT_NE(fit(fx.train, fx.enc, fx.config).loss_history, a.loss_history);
}

TEST(Fit, ConfigErrors) {
  Fixture fx;
  TrainConfig c = fx.config;
  c.warmup_steps = 11;
  EXPECT_THROW(fit(fx.train, fx.enc, c), ConfigError);
  c = fx.config;
  c.upsample_side = 9;
  EXPECT_THROW(fit(fx.train, fx.enc, c), ConfigError);
  c = fx.config;
  c.learning_rate = std::numeric_limits<double>::infinity();
  EXPECT_THROW(fit(fx.train, fx.enc, c), ConfigError);
  LabeledDataset test = gen_id(3, 8, 4, 8, Split::kIdTest);
  EXPECT_THROW(fit(test, fx.enc, fx.config), ConfigError);
  LabeledDataset empty = fx.train;
  empty.images.clear();
  empty.labels.clear();
  EXPECT_THROW(fit(empty, fx.enc, fx.config), ConfigError);
}

TEST(Fit, NonFiniteInputAbortsWithStep) {
  Fixture fx;
  for (std::size_t i = 0; i < fx.train.pixels(); ++i) fx.train.images[i] = std::numeric_limits<float>::quiet_NaN();
  try {
    fit(fx.train, fx.enc, fx.config);
    FAIL() << "expected NonFiniteLoss";
  } catch (const NonFiniteLoss& e) {
    EXPECT_LT(e.step(), 5u);  // image 0 is in some batch of the first epoch
  }
}

TEST(LinearProbe, SeparableBlobs) {
  Rng rng(4);
  const std::size_t n = 300, k = 6, m = 3;
  Tensor x(Shape{n, k});
  std::vector<std::int32_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::int32_t>(i % m);
    for (std::size_t j = 0; j < k; ++j) x.at(i, j) = (j == i % m ? 1.0 : 0.0) + rng.normal(0.0, 0.05);
  }
  const LinearClassifier clf = linear_probe_fit(x, y, m, LinearProbeConfig{});
  const Tensor logits = clf.logits(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c)
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    correct += static_cast<std::int32_t>(best) == y[i];
  }
  EXPECT_GE(static_cast<double>(correct) / n, 0.99);
}

TEST(LinearProbe, ZeroFeaturesGiveUniformLogits) {
  Rng rng(5);
  const Tensor x = random_tensor(rng, {20, 4});
  std::vector<std::int32_t> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = static_cast<std::int32_t>(i % 2);
  LinearProbeConfig cfg;
  cfg.epochs = 3;
  const LinearClassifier clf = linear_probe_fit(x, y, 3, cfg);
  const Tensor l = clf.logits(Tensor(Shape{1, 4}, 0.0));
  // Only the bias acts; class 2 never appears so its bias only falls.
  EXPECT_EQ(l.at(0, 0), clf.bias[0]);
  EXPECT_LT(l.at(0, 2), std::max(l.at(0, 0), l.at(0, 1)));
  const Tensor two = clf.logits(Tensor::matrix(2, 4, {1, 2, 3, 4, 1, 2, 3, 4}));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(two.at(0, c), two.at(1, c));
}

TEST(LinearProbe, Errors) {
  const Tensor x(Shape{4, 2}, 1.0);
  const std::vector<std::int32_t> same{1, 1, 1, 1}, bad{0, 1, 2, 5}, ok{0, 1, 0, 1};
  EXPECT_THROW(linear_probe_fit(x, same, 2, {}), ConfigError);
  EXPECT_THROW(linear_probe_fit(x, bad, 3, {}), ConfigError);
  EXPECT_THROW(linear_probe_fit(x, std::vector<std::int32_t>{0, 1}, 2, {}), ShapeError);
  LinearProbeConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(linear_probe_fit(x, ok, 2, cfg), ConfigError);
}

}  // namespace
}  // namespace rpk

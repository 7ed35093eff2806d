#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "crs/errors.hpp"
#include "crs/metrics.hpp"
#include "crs/rng.hpp"
#include "crs/training.hpp"
#include "grad_check.hpp"

namespace crs {
namespace {

HeadShape small_shape() {
  HeadShape s;
  s.hidden1 = 10;
  s.hidden2 = 6;
  return s;
}

std::vector<HeadExample> random_examples(std::size_t n, std::size_t image_dim, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::vector<HeadExample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out[i];
    e.label = static_cast<int>(i % 2);
    e.image.fill(0.0f);
    for (std::size_t d = 0; d < image_dim; ++d) e.image[d] = static_cast<float>(rng.normal());
    if (shift != 0.0)
      for (std::size_t d = 0; d < 4; ++d) e.image[d] += static_cast<float>(e.label ? shift : -shift);
    e.clinical = {rng.normal(), rng.normal()};
  }
  return out;
}

TEST(Wbce, SpecPoints) {
  EXPECT_NEAR(wbce_loss(0.5, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(wbce_loss(0.5, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(wbce_loss(0.9, 1, 2.0, 1.0), 0.210721, 1e-6);
  EXPECT_NEAR(wbce_loss(0.9, 1, 2.0, 1.0), -2.0 * std::log(0.9), 1e-15);
}

TEST(Wbce, UnitWeightsEqualBce) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double p = 1e-6 + (1.0 - 2e-6) * rng.uniform();
    const int y = rng.bernoulli(0.5);
    const double bce = -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
    EXPECT_NEAR(wbce_loss(p, y), bce, 1e-12);
  }
}

TEST(Wbce, ClampsExtremeProbabilities) {
  EXPECT_NEAR(wbce_loss(0.0, 1), -std::log(kProbClamp), 1e-9);
  EXPECT_NEAR(wbce_loss(1.0, 0), -std::log(kProbClamp), 1e-6);
  EXPECT_TRUE(std::isfinite(wbce_loss(1.0, 0)));
  EXPECT_GE(wbce_loss(1.0, 1), 0.0);
}

TEST(Wbce, BatchMeanAndGradient) {
  const std::vector<double> p{0.2, 0.7, 0.5, 0.9};
  const std::vector<int> y{0, 1, 1, 0};
  const ClassWeights w{2.0, 0.5};
  std::vector<double> grad;
  const double loss = wbce_batch<double>(p, y, w, &grad);
  double expected = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) expected += wbce_loss(p[i], y[i], w.positive, w.negative);
  EXPECT_NEAR(loss, expected / 4.0, 1e-12);
  ASSERT_EQ(grad.size(), 4u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double wi = y[i] ? w.positive : w.negative;
    EXPECT_NEAR(grad[i], wi * (p[i] - y[i]) / 4.0, 1e-12);
  }
}

TEST(ClassWeights, SpecExamples) {
  std::vector<int> balanced(20, 0);
  std::fill(balanced.begin(), balanced.begin() + 10, 1);
  const auto b = class_weights(balanced);
  EXPECT_DOUBLE_EQ(b.positive, 1.0);
  EXPECT_DOUBLE_EQ(b.negative, 1.0);

  std::vector<int> skewed(20, 0);
  std::fill(skewed.begin(), skewed.begin() + 5, 1);
  const auto s = class_weights(skewed);
  EXPECT_NEAR(s.positive, 2.0, 1e-12);
  EXPECT_NEAR(s.negative, 0.666667, 1e-6);

  EXPECT_THROW(class_weights(std::vector<int>(10, 0)), DataError);
}

TEST(Sampler, BalancedLabelsAreUniform) {
  std::vector<int> labels{0, 1, 0, 1, 1, 0};
  const WeightedSampler sampler(labels, 2, 1);
  for (double p : sampler.probabilities()) EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
}

TEST(Sampler, RarePositiveDrawnHalfTheTime) {
  std::vector<int> labels(100, 0);
  labels[37] = 1;
  const WeightedSampler sampler(labels, 10, 2024);
  EXPECT_EQ(sampler.batches_per_epoch(), 10u);
  std::size_t draws = 0, positives = 0;
  for (std::size_t e = 0; draws < 10000; ++e)
    for (const auto& batch : sampler.epoch(e))
      for (auto i : batch) {
        ++draws;
        positives += labels[i];
      }
  EXPECT_EQ(draws, 10000u);
  EXPECT_NEAR(static_cast<double>(positives) / static_cast<double>(draws), 0.5, 0.02);
}

TEST(Sampler, EpochShapeAndDeterminism) {
  std::vector<int> labels(43, 0);
  for (std::size_t i = 0; i < 43; i += 3) labels[i] = 1;
  const WeightedSampler a(labels, 42, 9), b(labels, 42, 9), c(labels, 42, 10);
  const auto ea = a.epoch(3);
  ASSERT_EQ(ea.size(), 2u);
  EXPECT_EQ(ea[0].size(), 42u);
  EXPECT_EQ(ea[1].size(), 1u);
  EXPECT_EQ(ea, b.epoch(3));
  EXPECT_NE(ea, c.epoch(3));
  EXPECT_NE(ea, a.epoch(4));
  EXPECT_THROW(WeightedSampler(std::vector<int>(5, 1), 2, 0), DataError);
}

TEST(Schedule, SpecExamples) {
  EXPECT_DOUBLE_EQ(lr_at(0, 110, 10, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(10, 110, 10, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(lr_at(110, 110, 10, 1e-3), 0.0);
  EXPECT_NEAR(lr_at(60, 110, 10, 1e-3), 0.5e-3, 1e-18);
  EXPECT_NEAR(lr_at(5, 110, 10, 1e-3), 0.5e-3, 1e-18);
}

TEST(Schedule, ContinuousAndPeaksAtWarmupBoundary) {
  double peak = 0.0;
  std::size_t argmax = 0;
  for (std::size_t s = 0; s <= 200; ++s) {
    const double lr = lr_at(s, 200, 20, 1.0);
    if (s > 0) {
      EXPECT_LE(std::abs(lr - lr_at(s - 1, 200, 20, 1.0)), 1.0 / 20.0 + 1e-12);
    }
    if (lr > peak) {
      peak = lr;
      argmax = s;
    }
  }
  EXPECT_EQ(argmax, 20u);
}

HeadShape tiny_shape() {
  HeadShape s;
  s.hidden1 = 3;
  s.hidden2 = 2;
  return s;
}

template <typename F>
void for_all(HeadParams<double>& p, F&& f) {
  p.for_each_trainable([&](const char*, std::vector<double>& t) {
    for (auto& v : t) f(v);
  });
}

TEST(AdamW, ZeroGradientWithoutDecayIsNoOp) {
  auto params = HeadParams<double>::initialize(tiny_shape(), 1);
  const auto before = params;
  auto grads = HeadParams<double>::zeros(tiny_shape());
  for_all(grads, [](double& v) { v = 0.0; });
  auto state = OptimizerState<double>::for_params(params);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_step(params, grads, state, 0.1, cfg);
  EXPECT_EQ(params.fc1.weight, before.fc1.weight);
  EXPECT_EQ(params.bn2.beta, before.bn2.beta);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  auto params = HeadParams<double>::initialize(tiny_shape(), 2);
  const auto before = params;
  auto grads = HeadParams<double>::zeros(tiny_shape());
  for_all(grads, [](double& v) { v = 1.0; });
  auto state = OptimizerState<double>::for_params(params);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_step(params, grads, state, 0.1, cfg);
  for (std::size_t i = 0; i < params.fc1.weight.size(); ++i)
    EXPECT_NEAR(before.fc1.weight[i] - params.fc1.weight[i], 0.1, 1e-8);
  EXPECT_NEAR(before.fc3.bias[0] - params.fc3.bias[0], 0.1, 1e-8);
}

TEST(AdamW, DecoupledDecayShrinksMultiplicatively) {
  auto params = HeadParams<double>::initialize(tiny_shape(), 3);
  const auto before = params;
  auto grads = HeadParams<double>::zeros(tiny_shape());
  for_all(grads, [](double& v) { v = 0.0; });
  auto state = OptimizerState<double>::for_params(params);
  AdamWConfig cfg;
  cfg.weight_decay = 0.5;
  adamw_step(params, grads, state, 0.1, cfg);
  for (std::size_t i = 0; i < params.fc2.weight.size(); ++i)
    EXPECT_NEAR(params.fc2.weight[i], before.fc2.weight[i] * (1.0 - 0.1 * 0.5), 1e-15);
}

TEST(AdamW, StableOnRandomQuadratics) {
  auto params = HeadParams<double>::initialize(tiny_shape(), 4);
  auto state = OptimizerState<double>::for_params(params);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.beta2 = cfg.beta1;
  Rng rng(4);
  std::vector<double> curvature;
  for_all(params, [&](double&) { curvature.push_back(rng.uniform(0.1, 10.0)); });
  for (int step = 0; step < 1000; ++step) {
    auto grads = params;
    std::size_t k = 0;
    for_all(grads, [&](double& v) { v *= curvature[k++]; });
    adamw_step(params, grads, state, 1e-2, cfg);
  }
  for_all(params, [](double& v) { ASSERT_TRUE(std::isfinite(v)); });
}

TEST(HeadGradients, FinalBiasGradientWithZeroFinalLayer) {
  auto params = HeadParams<double>::initialize(small_shape(), 5);
  std::fill(params.fc3.weight.begin(), params.fc3.weight.end(), 0.0);
  params.fc3.bias[0] = 0.0;
  const auto batch = random_examples(8, small_shape().image_dim, 5);
  const ClassWeights w{2.0, 0.5};
  const auto g = head_gradients<double>(params, batch, w, nullptr);
  // p = 0.5 everywhere: (1/8) * (4 * 2.0 * (0.5 - 1) + 4 * 0.5 * 0.5)
  EXPECT_NEAR(g.fc3.bias[0], -0.375, 1e-12);
  const auto unit = head_gradients<double>(params, batch, ClassWeights{}, nullptr);
  EXPECT_NEAR(unit.fc3.bias[0], 0.0, 1e-12);
}

TEST(HeadGradients, DuplicatedBatchGivesSameGradient) {
  const auto params = HeadParams<double>::initialize(small_shape(), 6);
  const auto batch = random_examples(6, small_shape().image_dim, 6);
  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const ClassWeights w{1.5, 0.75};
  double l1 = 0.0, l2 = 0.0;
  const auto g1 = head_gradients<double>(params, batch, w, nullptr, &l1);
  const auto g2 = head_gradients<double>(params, doubled, w, nullptr, &l2);
  EXPECT_NEAR(l1, l2, 1e-12);
  std::vector<std::vector<double>> a, b;
  g1.for_each_trainable([&](const char*, const std::vector<double>& t) { a.push_back(t); });
  g2.for_each_trainable([&](const char*, const std::vector<double>& t) { b.push_back(t); });
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) EXPECT_NEAR(a[t][i], b[t][i], 1e-10);
}

TEST(HeadGradients, RejectsSingletonBatch) {
  const auto params = HeadParams<double>::initialize(small_shape(), 7);
  const auto batch = random_examples(1, small_shape().image_dim, 7);
  EXPECT_THROW(head_gradients<double>(params, batch, ClassWeights{}, nullptr), DataError);
}

TEST(HeadGradients, MatchFiniteDifferencesInDouble) {
  const auto params = HeadParams<double>::initialize(small_shape(), 8);
  const auto batch = random_examples(8, small_shape().image_dim, 8);
  Rng rng(8);
  const auto masks = sample_dropout<double>(small_shape(), batch.size(), rng);
  for (const auto& t : testing::check_head_gradients(params, batch, ClassWeights{1.6, 0.7}, &masks, 1e-6, 1000, 8))
    EXPECT_LT(t.relative_error, 1e-6) << t.name << " " << t.entries;
}

TEST(HeadGradients, MatchFiniteDifferencesInFloat) {
  const auto params = HeadParams<float>::initialize(small_shape(), 9);
  const auto batch = random_examples(8, small_shape().image_dim, 9);
  Rng rng(9);
  const auto masks = sample_dropout<float>(small_shape(), batch.size(), rng);
  for (const auto& t : testing::check_head_gradients(params, batch, ClassWeights{1.6, 0.7}, &masks, 1e-6, 1000, 9))
    EXPECT_LT(t.relative_error, 1e-3) << t.name << " " << t.entries;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.max_epochs = 30;
  c.batch_size = 16;
  c.peak_lr = 1e-2;
  c.patience = 0;
  c.seed = 17;
  return c;
}

TEST(Train, OneEpochWithoutEarlyStopping) {
  const auto train = random_examples(40, small_shape().image_dim, 10);
  const auto val = random_examples(10, small_shape().image_dim, 11);
  auto cfg = quick_config();
  cfg.max_epochs = 1;
  const auto result = train_head(train, val, small_shape(), cfg);
  EXPECT_EQ(result.history.epochs.size(), 1u);
  EXPECT_EQ(result.history.best_epoch, 1u);
}

TEST(Train, SeparableEmbeddingsAreLearned) {
  const auto train = random_examples(200, small_shape().image_dim, 12, 1.5);
  const auto val = random_examples(60, small_shape().image_dim, 13, 1.5);
  const auto result = train_head(train, val, small_shape(), quick_config());
  const auto& h = result.history.epochs;
  ASSERT_GE(h.size(), 5u);
  for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(h[e].train_loss, h[e - 1].train_loss) << "epoch " << e + 1;
  std::vector<int> labels;
  for (const auto& v : val) labels.push_back(v.label);
  const auto auc = roc_auc_value(score_examples(result.params, val), labels);
  ASSERT_TRUE(auc.has_value());
  EXPECT_GE(*auc, 0.95);
}

TEST(Train, DeterministicUnderFixedSeed) {
  const auto train = random_examples(60, small_shape().image_dim, 14, 0.5);
  const auto val = random_examples(20, small_shape().image_dim, 15, 0.5);
  auto cfg = quick_config();
  cfg.max_epochs = 5;
  const auto a = train_head(train, val, small_shape(), cfg);
  const auto b = train_head(train, val, small_shape(), cfg);
  EXPECT_EQ(a.params.to_archive().serialize(), b.params.to_archive().serialize());
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e)
    EXPECT_EQ(a.history.epochs[e].train_loss, b.history.epochs[e].train_loss);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const auto train = random_examples(60, small_shape().image_dim, 16);
  const auto val = random_examples(20, small_shape().image_dim, 17);
  auto cfg = quick_config();
  cfg.max_epochs = 200;
  cfg.patience = 3;
  const auto r = train_head(train, val, small_shape(), cfg);
  if (r.history.stop_reason == "early_stopping") {
    EXPECT_EQ(r.history.epochs.size(), r.history.best_epoch + 3);
  }
  EXPECT_LE(r.history.best_epoch, r.history.epochs.size());
}

TEST(Train, RejectsBadConfigAndData) {
  const auto train = random_examples(20, small_shape().image_dim, 18);
  auto cfg = quick_config();
  cfg.batch_size = 1;
  EXPECT_THROW(train_head(train, train, small_shape(), cfg), ConfigError);
  cfg = quick_config();
  EXPECT_THROW(train_head(train, {}, small_shape(), cfg), DataError);
  auto one_class = train;
  for (auto& e : one_class) e.label = 0;
  EXPECT_THROW(train_head(one_class, train, small_shape(), cfg), DataError);
}

}  // namespace
}  // namespace crs

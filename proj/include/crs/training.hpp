#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crs/head.hpp"

namespace crs {

inline constexpr double kProbClamp = 1e-7;

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

/// -[w_pos y ln p + w_neg (1-y) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
double wbce_loss(double probability, int label, double w_pos = 1.0, double w_neg = 1.0);

/// Mean WBCE over a batch and its gradient with respect to each logit
/// (zero where the probability was clamped).
template <typename Real>
Real wbce_batch(std::span<const Real> probs, std::span<const int> labels, const ClassWeights& w,
                std::vector<Real>* dlogits = nullptr);

/// Inverse-frequency weights N / (2 N_c). Throws DataError on a single-class set.
ClassWeights class_weights(std::span<const int> labels);

/// Samples indices with replacement, P(i) proportional to 1/N_class(i).
/// Each epoch draws N indices split into ceil(N / batch_size) batches.
class WeightedSampler {
 public:
  WeightedSampler(std::span<const int> labels, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::vector<std::size_t>> epoch(std::size_t epoch_index) const;
  const std::vector<double>& probabilities() const { return prob_; }
  std::size_t batches_per_epoch() const;

 private:
  std::vector<double> prob_;
  std::vector<double> cumulative_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Linear warm-up to `peak` at `warmup_steps`, then linear decay to 0 at `total_steps`.
double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double peak);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-7;
};

template <typename Real>
struct OptimizerState {
  HeadParams<Real> first_moment;
  HeadParams<Real> second_moment;
  std::size_t step = 0;

  static OptimizerState for_params(const HeadParams<Real>& params);
};

/// theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + lambda theta), bias-corrected moments.
template <typename Real>
void adamw_step(HeadParams<Real>& params, const HeadParams<Real>& grads, OptimizerState<Real>& state, double lr,
                const AdamWConfig& config);

/// One labelled example for the head: cached image embedding + standardized clinical vector.
struct HeadExample {
  Embedding image{};
  std::vector<double> clinical;
  int label = 0;
};

/// Mean-WBCE gradients of a batch (train-mode forward with the given dropout masks).
template <typename Real>
HeadParams<Real> head_gradients(const HeadParams<Real>& params, std::span<const HeadExample> batch,
                                const ClassWeights& weights, const DropoutMasks<Real>* masks, Real* loss = nullptr);

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 42;
  double peak_lr = 1e-6;
  double warmup_fraction = 0.1;
  AdamWConfig adamw;
  std::size_t patience = 20;  // 0 disables early stopping
  double min_delta = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;  // NaN when the validation split has one class
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::string stop_reason;
};

struct TrainResult {
  HeadParams<float> params;
  TrainHistory history;
};

/// Trains the head on `train`, monitoring validation WBCE for early stopping,
/// and returns the parameters of the best validation epoch.
TrainResult train_head(std::span<const HeadExample> train, std::span<const HeadExample> val, const HeadShape& shape,
                       const TrainConfig& config);

/// Eval-mode probabilities for a set of examples.
std::vector<double> score_examples(const HeadParams<float>& params, std::span<const HeadExample> examples);

}  // namespace crs

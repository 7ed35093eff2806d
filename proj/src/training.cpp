#include "crs/training.hpp"

#include <algorithm>
#include <cmath>

#include "crs/errors.hpp"
#include "crs/metrics.hpp"

namespace crs {

double wbce_loss(double p, int y, double w_pos, double w_neg) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(w_pos * y * std::log(p) + w_neg * (1 - y) * std::log(1.0 - p));
}

template <typename Real>
Real wbce_batch(std::span<const Real> probs, std::span<const int> labels, const ClassWeights& w,
                std::vector<Real>* dlogits) {
  if (probs.size() != labels.size() || probs.empty()) throw DataError("loss batch size mismatch");
  const auto n = static_cast<Real>(probs.size());
  const auto lo = static_cast<Real>(kProbClamp), hi = Real(1) - static_cast<Real>(kProbClamp);
  const auto wp = static_cast<Real>(w.positive), wn = static_cast<Real>(w.negative);
  if (dlogits) dlogits->assign(probs.size(), Real(0));
  Real total = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Real p = probs[i];
    const Real pc = std::clamp(p, lo, hi);
    const int y = labels[i];
    total += y ? -wp * std::log(pc) : -wn * std::log(Real(1) - pc);
    if (dlogits && p > lo && p < hi) (*dlogits)[i] = (y ? -wp * (Real(1) - p) : wn * p) / n;
  }
  return total / n;
}

template float wbce_batch<float>(std::span<const float>, std::span<const int>, const ClassWeights&,
                                 std::vector<float>*);
template double wbce_batch<double>(std::span<const double>, std::span<const int>, const ClassWeights&,
                                   std::vector<double>*);

ClassWeights class_weights(std::span<const int> labels) {
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n = static_cast<double>(labels.size());
  const double neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("class weights need both classes in the training set");
  return {n / (2.0 * pos), n / (2.0 * neg)};
}

WeightedSampler::WeightedSampler(std::span<const int> labels, std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw DataError("weighted sampler needs both classes");
  double total = 0.0;
  for (int y : labels) {
    prob_.push_back(1.0 / (y ? pos : neg));
    total += prob_.back();
  }
  double acc = 0.0;
  for (auto& p : prob_) {
    p /= total;
    acc += p;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

std::size_t WeightedSampler::batches_per_epoch() const { return (prob_.size() + batch_size_ - 1) / batch_size_; }

std::vector<std::vector<std::size_t>> WeightedSampler::epoch(std::size_t epoch_index) const {
  Rng rng = Rng::derive(seed_, stream::kSampler, epoch_index);
  const std::size_t n = prob_.size();
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size_) {
    std::vector<std::size_t> batch;
    for (std::size_t i = start; i < std::min(n, start + batch_size_); ++i) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      batch.push_back(static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), n - 1)));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double peak) {
  if (step > total_steps) step = total_steps;
  if (warmup_steps > 0 && step <= warmup_steps)
    return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps == warmup_steps) return 0.0;
  return peak * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup_steps);
}

template <typename Real>
OptimizerState<Real> OptimizerState<Real>::for_params(const HeadParams<Real>& params) {
  OptimizerState s;
  s.first_moment = HeadParams<Real>::zeros(params.shape);
  s.first_moment.for_each_trainable([](const char*, std::vector<Real>& t) { std::fill(t.begin(), t.end(), Real(0)); });
  s.second_moment = s.first_moment;
  return s;
}

template <typename Real>
void adamw_step(HeadParams<Real>& params, const HeadParams<Real>& grads, OptimizerState<Real>& state, double lr,
                const AdamWConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  std::vector<std::vector<Real>*> p, m, v;
  std::vector<const std::vector<Real>*> g;
  params.for_each_trainable([&](const char*, std::vector<Real>& t) { p.push_back(&t); });
  state.first_moment.for_each_trainable([&](const char*, std::vector<Real>& t) { m.push_back(&t); });
  state.second_moment.for_each_trainable([&](const char*, std::vector<Real>& t) { v.push_back(&t); });
  grads.for_each_trainable([&](const char*, const std::vector<Real>& t) { g.push_back(&t); });

  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t]->size() != g[t]->size()) throw DataError("optimizer shape mismatch");
    for (std::size_t i = 0; i < p[t]->size(); ++i) {
      const double gi = (*g[t])[i];
      double mi = cfg.beta1 * (*m[t])[i] + (1.0 - cfg.beta1) * gi;
      double vi = cfg.beta2 * (*v[t])[i] + (1.0 - cfg.beta2) * gi * gi;
      (*m[t])[i] = static_cast<Real>(mi);
      (*v[t])[i] = static_cast<Real>(vi);
      const double theta = (*p[t])[i];
      const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.epsilon) + cfg.weight_decay * theta;
      (*p[t])[i] = static_cast<Real>(theta - lr * update);
    }
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adamw_step<float>(HeadParams<float>&, const HeadParams<float>&, OptimizerState<float>&, double,
                                const AdamWConfig&);
template void adamw_step<double>(HeadParams<double>&, const HeadParams<double>&, OptimizerState<double>&, double,
                                 const AdamWConfig&);

namespace {

template <typename Real>
HeadInput<Real> batch_input(std::span<const HeadExample> batch) {
  std::vector<Embedding> images;
  std::vector<std::vector<double>> clinical;
  for (const auto& ex : batch) {
    images.push_back(ex.image);
    clinical.push_back(ex.clinical);
  }
  return make_head_input<Real>(images, clinical);
}

std::vector<int> labels_of(std::span<const HeadExample> batch) {
  std::vector<int> labels;
  for (const auto& ex : batch) labels.push_back(ex.label);
  return labels;
}

}  // namespace

template <typename Real>
HeadParams<Real> head_gradients(const HeadParams<Real>& params, std::span<const HeadExample> batch,
                                const ClassWeights& weights, const DropoutMasks<Real>* masks, Real* loss) {
  if (batch.size() < 2) throw DataError("gradient batches need at least 2 examples");
  const HeadInput<Real> in = batch_input<Real>(batch);
  const auto acts = head_forward(params, in, Mode::kTrain, masks);
  const std::vector<int> labels = labels_of(batch);
  std::vector<Real> dlogits;
  const Real l = wbce_batch<Real>(acts.probs, labels, weights, &dlogits);
  if (loss) *loss = l;
  return head_backward(params, in, acts, masks, std::span<const Real>(dlogits));
}

template HeadParams<float> head_gradients<float>(const HeadParams<float>&, std::span<const HeadExample>,
                                                 const ClassWeights&, const DropoutMasks<float>*, float*);
template HeadParams<double> head_gradients<double>(const HeadParams<double>&, std::span<const HeadExample>,
                                                   const ClassWeights&, const DropoutMasks<double>*, double*);

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2 for batch normalization");
  if (!(peak_lr > 0.0)) throw ConfigError("peak_lr must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("warmup_fraction must be in [0,1)");
  if (adamw.weight_decay < 0.0 || !(adamw.epsilon > 0.0)) throw ConfigError("invalid AdamW settings");
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0 && adamw.beta2 >= 0.0 && adamw.beta2 < 1.0))
    throw ConfigError("AdamW betas must be in [0,1)");
}

std::vector<double> score_examples(const HeadParams<float>& params, std::span<const HeadExample> examples) {
  if (examples.empty()) return {};
  const auto acts = head_forward(params, batch_input<float>(examples), Mode::kEval);
  return std::vector<double>(acts.probs.begin(), acts.probs.end());
}

TrainResult train_head(std::span<const HeadExample> train, std::span<const HeadExample> val, const HeadShape& shape,
                       const TrainConfig& config) {
  config.validate();
  if (train.empty() || val.empty()) throw DataError("training and validation splits must be non-empty");
  const std::vector<int> train_labels = labels_of(train);
  const std::vector<int> val_labels = labels_of(val);
  const ClassWeights weights = class_weights(train_labels);
  const WeightedSampler sampler(train_labels, config.batch_size, config.seed);

  const std::size_t last = train.size() % config.batch_size;
  const std::size_t steps_per_epoch = sampler.batches_per_epoch() - (last == 1 ? 1 : 0);
  if (steps_per_epoch == 0) throw DataError("training split too small for one batch");
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  std::size_t warmup = static_cast<std::size_t>(std::llround(config.warmup_fraction * static_cast<double>(total_steps)));
  warmup = std::min(warmup, total_steps - 1);

  TrainResult result{HeadParams<float>::initialize(shape, config.seed), {}};
  HeadParams<float> params = result.params;
  OptimizerState<float> state = OptimizerState<float>::for_params(params);

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;
  result.history.stop_reason = "max_epochs";

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double lr = 0.0;
    for (const auto& indices : sampler.epoch(epoch)) {
      if (indices.size() < 2) continue;
      std::vector<HeadExample> batch;
      for (auto i : indices) batch.push_back(train[i]);
      Rng drop_rng = Rng::derive(config.seed, stream::kDropout, step);
      const auto masks = sample_dropout<float>(shape, batch.size(), drop_rng);

      const HeadInput<float> in = batch_input<float>(batch);
      const auto acts = head_forward(params, in, Mode::kTrain, &masks);
      const std::vector<int> labels = labels_of(batch);
      std::vector<float> dlogits;
      const float loss = wbce_batch<float>(acts.probs, labels, weights, &dlogits);
      if (!std::isfinite(loss))
        throw DataError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", step " +
                        std::to_string(step + 1));
      const auto grads = head_backward(params, in, acts, &masks, std::span<const float>(dlogits));
      lr = lr_at(step + 1, total_steps, warmup, config.peak_lr);
      adamw_step(params, grads, state, lr, config.adamw);
      update_running_stats(params, acts);
      loss_sum += loss;
      ++loss_count;
      ++step;
    }

    const std::vector<double> val_scores = score_examples(params, val);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i)
      val_loss += wbce_loss(val_scores[i], val_labels[i], weights.positive, weights.negative);
    val_loss /= static_cast<double>(val.size());
    if (!std::isfinite(val_loss)) throw DataError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    const auto auc = roc_auc_value(val_scores, val_labels);

    result.history.epochs.push_back({epoch + 1, lr, loss_sum / static_cast<double>(std::max<std::size_t>(1, loss_count)),
                                     val_loss, auc.value_or(std::numeric_limits<double>::quiet_NaN())});

    if (val_loss < best_val - config.min_delta) {
      best_val = val_loss;
      since_best = 0;
      result.params = params;
      result.history.best_epoch = epoch + 1;
    } else {
      ++since_best;
      if (config.patience > 0 && since_best >= config.patience) {
        result.history.stop_reason = "early_stopping";
        break;
      }
    }
  }
  return result;
}

}  // namespace crs

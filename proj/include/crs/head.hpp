#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crs/clinical.hpp"
#include "crs/encoder.hpp"
#include "crs/rng.hpp"
#include "crs/tarc.hpp"

namespace crs {

/// Widths and regularization of the clinical encoder + fusion MLP.
struct HeadShape {
  std::size_t image_dim = kEmbedDim;
  std::size_t clinical_dim = 2;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 32;
  double dropout = 0.25;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  std::size_t fused_dim() const { return image_dim + clinical_dim; }
  bool operator==(const HeadShape&) const = default;
};

template <typename Real>
struct Dense {
  std::size_t in = 0, out = 0;
  std::vector<Real> weight;  // (out, in) row-major
  std::vector<Real> bias;    // (out)
};

template <typename Real>
struct BatchNorm {
  std::vector<Real> gamma, beta;
  std::vector<Real> running_mean, running_var;
};

/// Trainable part of the model: z_clin = ReLU(A c + b), then
/// [z_img || z_clin] -> fc1 -> BN -> ReLU -> dropout -> fc2 -> BN -> ReLU -> dropout -> fc3 -> sigmoid.
template <typename Real>
struct HeadParams {
  HeadShape shape;
  Dense<Real> clinical;
  Dense<Real> fc1, fc2, fc3;
  BatchNorm<Real> bn1, bn2;

  /// All weights zero, BN gamma 1, running var 1.
  static HeadParams zeros(const HeadShape& shape);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static HeadParams initialize(const HeadShape& shape, std::uint64_t seed);

  /// Visits (name, tensor) for every trainable tensor in a fixed order.
  template <typename F>
  void for_each_trainable(F&& f) {
    f("clinical.weight", clinical.weight);
    f("clinical.bias", clinical.bias);
    f("fc1.weight", fc1.weight);
    f("fc1.bias", fc1.bias);
    f("bn1.weight", bn1.gamma);
    f("bn1.bias", bn1.beta);
    f("fc2.weight", fc2.weight);
    f("fc2.bias", fc2.bias);
    f("bn2.weight", bn2.gamma);
    f("bn2.bias", bn2.beta);
    f("fc3.weight", fc3.weight);
    f("fc3.bias", fc3.bias);
  }
  template <typename F>
  void for_each_trainable(F&& f) const {
    const_cast<HeadParams*>(this)->for_each_trainable(
        [&](const char* name, std::vector<Real>& t) { f(name, static_cast<const std::vector<Real>&>(t)); });
  }

  TensorArchive to_archive() const;
  /// Throws DataError on missing tensors, wrong shapes, non-finite values or
  /// running variances <= 0.
  static HeadParams from_archive(const TensorArchive& archive, const HeadShape& shape);

  template <typename Other>
  HeadParams<Other> cast() const;
};

enum class Mode { kTrain, kEval };

/// A batch of fused inputs: image embeddings (B x image_dim) and standardized
/// clinical features (B x clinical_dim), both row-major.
template <typename Real>
struct HeadInput {
  std::size_t batch = 0;
  std::vector<Real> image;
  std::vector<Real> clinical;
};

/// Inverted-dropout multipliers (0 or 1/(1-p)) per hidden unit.
template <typename Real>
struct DropoutMasks {
  std::vector<Real> hidden1;  // B x h1
  std::vector<Real> hidden2;  // B x h2
};

template <typename Real>
DropoutMasks<Real> sample_dropout(const HeadShape& shape, std::size_t batch, Rng& rng);

/// Intermediate values retained for the backward pass.
template <typename Real>
struct HeadActivations {
  Mode mode = Mode::kEval;
  std::size_t batch = 0;
  std::vector<Real> clin_pre, fused;
  std::vector<Real> pre1, xhat1, inv_std1, relu1, drop1, batch_mean1, batch_var1;
  std::vector<Real> pre2, xhat2, inv_std2, relu2, drop2, batch_mean2, batch_var2;
  std::vector<Real> logits, probs;
};

/// Forward pass. Train mode uses batch statistics (needs batch >= 2) and the
/// given dropout masks (null = no dropout); eval mode uses running statistics.
/// Throws DataError if any intermediate is non-finite.
template <typename Real>
HeadActivations<Real> head_forward(const HeadParams<Real>& params, const HeadInput<Real>& input, Mode mode,
                                   const DropoutMasks<Real>* masks = nullptr);

/// Gradients of sum_b dlogits[b] * logit_b with respect to every trainable
/// tensor; the result uses the HeadParams layout (running stats left zero).
template <typename Real>
HeadParams<Real> head_backward(const HeadParams<Real>& params, const HeadInput<Real>& input,
                               const HeadActivations<Real>& acts, const DropoutMasks<Real>* masks,
                               std::span<const Real> dlogits);

/// Running-statistics update with the shape's momentum (unbiased variance).
template <typename Real>
void update_running_stats(HeadParams<Real>& params, const HeadActivations<Real>& acts);

/// Builds a batch from embeddings and already-standardized clinical vectors.
template <typename Real>
HeadInput<Real> make_head_input(std::span<const Embedding> images, std::span<const std::vector<double>> clinical);

/// Eval-mode probability for a single patient.
double fuse_and_score(const Embedding& image, const std::vector<double>& clinical_z, const HeadParams<float>& params);

/// Label from probability: 1 iff p >= threshold.
int decide(double probability, double threshold);

struct Prediction {
  double probability = 0.5;
  int label = 0;
  double threshold = 0.5;
};

/// z_clin = ReLU(A z + b) for one patient, evaluated in double.
std::vector<double> encode_clinical(const ClinicalRecord& record, const ClinicalStats& stats,
                                    const HeadParams<float>& params);

/// Saved model: tensors in "<dir>/head.tarc", metadata in "<dir>/head.manifest".
struct Checkpoint {
  HeadParams<float> params;
  ClinicalStats stats;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt,
                     const std::vector<std::pair<std::string, std::string>>& provenance = {});
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace crs

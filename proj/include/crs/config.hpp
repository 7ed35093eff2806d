#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crs/clinical.hpp"
#include "crs/metrics.hpp"
#include "crs/synth.hpp"
#include "crs/training.hpp"
#include "crs/volume.hpp"

namespace crs {

struct PathsConfig {
  std::filesystem::path manifest;  // empty: the synthetic cohort of this config
  std::filesystem::path encoder;   // empty: encoder.tarc next to the synthetic cohort
  std::filesystem::path out = "out";
};

struct PreprocessSettings {
  double isotropic_mm = 1.0;
  Dims3 grid = kModelGrid;
  double window_level = 40.0;
  double window_width = 400.0;
  int connectivity = 26;
};

struct ModelConfig {
  std::vector<ClinicalFeature> clinical_features{ClinicalFeature::kAge, ClinicalFeature::kCa125};
  Ca125Scale ca125_scale = Ca125Scale::kRaw;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 32;
  double dropout = 0.25;
  std::size_t register_tokens = 0;
};

struct EvalConfig {
  ThresholdPolicy policy = ThresholdPolicy::precision_at_least(0.75);
  std::optional<double> threshold;  // overrides the policy threshold when set
  Split split = Split::kTest;
  std::size_t resamples = 1000;
  double confidence = 0.95;
  std::size_t bins = 10;
};

struct AblationConfig {
  std::vector<std::string> rows{"ct_only", "ct_age", "ct_ca125", "ct_age_ca125", "clinical_baseline"};
  Split split = Split::kTest;
  double baseline_l2 = 1e-2;
};

/// Everything a run needs. Loaded from an INI file:
///
///   seed = 7
///   [paths]      manifest, encoder, out
///   [preprocess] isotropic_mm, grid, window_level, window_width, connectivity
///   [model]      clinical_features, ca125_scale, hidden1, hidden2, dropout, register_tokens
///   [train]      max_epochs, batch_size, peak_lr, warmup_fraction, beta1, beta2,
///                epsilon, weight_decay, patience, min_delta
///   [evaluate]   policy, precision_floor, fixed_threshold, threshold, split,
///                resamples, confidence, bins
///   [ablate]     rows, split, baseline_l2
///   [synth]      n_patients, n_external, ... (see SynthConfig)
///   [runtime]    workers
///
/// The seed drives the synthetic cohort, initialization, sampling, dropout
/// and the bootstrap.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  PathsConfig paths;
  PreprocessSettings preprocess;
  ModelConfig model;
  TrainConfig train;
  EvalConfig evaluate;
  AblationConfig ablate;
  SynthConfig synth;
  std::size_t workers = 0;

  /// Throws ConfigError when the seed is missing or a value is out of range.
  void validate() const;
  std::uint64_t require_seed() const;

  /// Sets one "section.key" (or "seed") from its text form; throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Canonical "key=value" lines of every setting that affects results
  /// (paths and worker count are excluded).
  std::string canonical() const;
  /// Short hashes of the settings each stage depends on.
  std::string hash() const;
  std::string synth_hash() const;
  std::string preprocess_hash() const;
  /// Settings that determine the trained model (synth, preprocess, model, train).
  std::string model_hash() const;

  HeadShape head_shape() const;
};

RunConfig parse_config(const std::string& ini_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace crs

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crs/clinical.hpp"
#include "crs/volume.hpp"

namespace crs {

/// Generator settings for a synthetic cohort. Labels follow a logistic model
///   logit = b + volume_effect * z(ln V) + ca125_effect * z(ln CA-125) + age_effect * z(age)
///   y = [logit + noise * e > 0],  e ~ standard logistic
/// so P(y = 1) = sigmoid(logit / noise). The intercept b is solved so that the
/// expected positive fraction of the internal cohort equals `prior`.
struct SynthConfig {
  std::size_t n_patients = 320;  // internal cohort (train/val/test)
  std::size_t n_external = 0;    // extra patients with split "external"
  double val_fraction = 0.125;
  double test_fraction = 0.125;
  std::uint64_t seed = 0;

  Dims3 grid{64, 64, 24};
  Vec3 spacing{3.0, 3.0, 6.0};
  std::size_t lesions_min = 1;
  std::size_t lesions_max = 3;
  double radius_min_mm = 8.0;
  double radius_max_mm = 25.0;
  double background_hu = -100.0;
  double lesion_hu_min = 30.0;
  double lesion_hu_max = 60.0;

  double age_mean = 63.0;
  double age_sd = 8.0;
  double age_min = 30.0;
  double age_max = 90.0;
  double ca125_median = 1000.0;
  double ca125_log_sd = 1.2;

  double volume_effect = -1.5;
  double ca125_effect = 1.5;
  double age_effect = 0.0;
  double noise = 0.25;
  double prior = 0.3;
  // Reference point for standardizing ln(volume): z = ln(V / center) / scale.
  double volume_center_cm3 = 30.0;
  double volume_log_scale = 0.7;

  // Domain shift applied to external patients.
  double external_hu_shift = 10.0;
  double external_ca125_scale = 1.3;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct SynthFeatures {
  double lesion_volume_cm3 = 0.0;  // of the digitized mask
  double age = 0.0;
  double ca125 = 0.0;
};

/// Linear predictor without the intercept.
double synth_linear_predictor(const SynthFeatures& f, const SynthConfig& config);
/// Ground-truth P(label = 1). With zero noise this is the step function
/// (0.5 exactly on the boundary).
double oracle_score(const SynthFeatures& f, const SynthConfig& config, double intercept);

struct SynthPatient {
  ClinicalRecord record;
  SynthFeatures features;
  std::size_t lesion_count = 0;
  double oracle = 0.5;
  int label = 0;
};

struct SynthCohort {
  double intercept = 0.0;
  std::vector<SynthPatient> patients;  // internal first, then external
};

struct SynthImage {
  CtVolume volume;
  LesionMask mask;
};

/// Volume and mask of one patient (deterministic in config.seed, index, external).
SynthImage synth_image(const SynthConfig& config, std::size_t index, bool external);

/// Features and labels only; images are generated and discarded.
SynthCohort simulate_cohort(const SynthConfig& config);

/// Writes manifest.csv, oracle.csv, volumes/ and masks/ under `dir`.
SynthCohort generate_cohort(const SynthConfig& config, const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& provenance = {});

}  // namespace crs

#pragma once

#include <span>
#include <string>
#include <vector>

#include "crs/clinical.hpp"

namespace crs {

/// One row of the feature-ablation grid.
struct AblationSpec {
  std::string name;
  bool ct = true;                          // image embedding included
  std::vector<ClinicalFeature> clinical;   // clinical features fed to the head
  bool baseline = false;                   // logistic model on age, CA-125 and lesion volume
};

/// "ct_only", "ct_age", "ct_ca125", "ct_age_ca125" or "clinical_baseline"; throws ConfigError otherwise.
AblationSpec ablation_spec(const std::string& name);

/// L2-regularized logistic regression fitted by Newton's method on
/// internally standardized features. The intercept is not penalized.
struct LogisticModel {
  std::vector<double> mean, scale;
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t iterations = 0;

  double predict(std::span<const double> x) const;
};

/// Throws DataError on an empty or single-class training set or ragged rows.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2);

/// Baseline inputs: age, ln(1 + CA-125), ln(lesion volume in cm^3).
std::vector<double> baseline_features(const ClinicalRecord& record, double lesion_volume_cm3);

}  // namespace crs

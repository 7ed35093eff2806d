#include "crs/clinical.hpp"

#include <algorithm>
#include <cmath>

#include "crs/errors.hpp"

namespace crs {

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kExternal: return "external";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  if (text == "external") return Split::kExternal;
  throw DataError("unknown split: " + text);
}

void validate(const ClinicalRecord& r) {
  if (!(r.age > 0.0 && r.age < 130.0)) throw DataError("age out of range for " + r.patient_id);
  if (!(r.ca125 >= 0.0) || !std::isfinite(r.ca125)) throw DataError("invalid CA-125 for " + r.patient_id);
  if (r.crs < 1 || r.crs > 3) throw DataError("CRS must be 1, 2 or 3 for " + r.patient_id);
}

int response_label(int crs) {
  if (crs < 1 || crs > 3) throw DataError("CRS must be 1, 2 or 3");
  return crs == 3 ? 1 : 0;
}

std::string to_string(ClinicalFeature f) { return f == ClinicalFeature::kAge ? "age" : "ca125"; }

ClinicalFeature parse_clinical_feature(const std::string& text) {
  if (text == "age") return ClinicalFeature::kAge;
  if (text == "ca125") return ClinicalFeature::kCa125;
  throw ConfigError("unknown clinical feature: " + text);
}

double feature_value(const ClinicalRecord& record, ClinicalFeature f) {
  return f == ClinicalFeature::kAge ? record.age : record.ca125;
}

std::string to_string(Ca125Scale s) { return s == Ca125Scale::kLog ? "log" : "raw"; }

Ca125Scale parse_ca125_scale(const std::string& text) {
  if (text == "raw") return Ca125Scale::kRaw;
  if (text == "log") return Ca125Scale::kLog;
  throw ConfigError("unknown CA-125 scale: " + text + " (expected raw or log)");
}

double ClinicalStats::scaled(const ClinicalRecord& record, ClinicalFeature f) const {
  const double v = feature_value(record, f);
  return f == ClinicalFeature::kCa125 && ca125_scale == Ca125Scale::kLog ? std::log1p(v) : v;
}

std::vector<double> ClinicalStats::standardize(const ClinicalRecord& record) const {
  std::vector<double> z(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double v = scaled(record, features[i]);
    if (!std::isfinite(v)) throw DataError("missing clinical feature for " + record.patient_id);
    z[i] = (v - mean[i]) / deviation[i];
  }
  return z;
}

ClinicalStats fit_clinical_stats(const std::vector<ClinicalRecord>& records,
                                 const std::vector<ClinicalFeature>& features, Ca125Scale ca125_scale) {
  std::vector<const ClinicalRecord*> train;
  for (const auto& r : records)
    if (r.split == Split::kTrain) train.push_back(&r);
  if (train.size() < 2) throw DataError("clinical statistics need at least 2 training records");

  ClinicalStats stats;
  stats.features = features;
  stats.ca125_scale = ca125_scale;
  const auto n = static_cast<double>(train.size());
  for (ClinicalFeature f : features) {
    double sum = 0.0;
    for (const auto* r : train) sum += stats.scaled(*r, f);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto* r : train) {
      const double d = stats.scaled(*r, f) - mean;
      ss += d * d;
    }
    stats.mean.push_back(mean);
    stats.deviation.push_back(std::max(std::sqrt(ss / n), kDeviationFloor));
  }
  return stats;
}

}  // namespace crs

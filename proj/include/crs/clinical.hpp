#pragma once

#include <optional>
#include <string>
#include <vector>

namespace crs {

enum class Split { kTrain, kVal, kTest, kExternal };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct ClinicalRecord {
  std::string patient_id;
  double age = 0.0;    // years
  double ca125 = 0.0;  // U/mL
  int crs = 1;         // 1, 2 or 3
  Split split = Split::kTrain;
};

/// Throws DataError unless 0 < age < 130, ca125 >= 0 and crs in {1,2,3}.
void validate(const ClinicalRecord& record);

/// The single place where CRS grades become binary labels: CRS 3 -> 1, CRS 1-2 -> 0.
int response_label(int crs);

enum class ClinicalFeature { kAge, kCa125 };

std::string to_string(ClinicalFeature f);
ClinicalFeature parse_clinical_feature(const std::string& text);
double feature_value(const ClinicalRecord& record, ClinicalFeature f);

/// How CA-125 enters standardization. kLog uses log1p(U/mL), which tames the
/// long right tail of the marker.
enum class Ca125Scale { kRaw, kLog };

std::string to_string(Ca125Scale s);
Ca125Scale parse_ca125_scale(const std::string& text);

/// Per-feature standardization fitted on the training split only.
struct ClinicalStats {
  std::vector<ClinicalFeature> features;
  Ca125Scale ca125_scale = Ca125Scale::kRaw;
  std::vector<double> mean;
  std::vector<double> deviation;  // population convention, floored at 1e-8

  std::size_t size() const { return features.size(); }
  double scaled(const ClinicalRecord& record, ClinicalFeature f) const;
  std::vector<double> standardize(const ClinicalRecord& record) const;
};

inline constexpr double kDeviationFloor = 1e-8;

/// Uses only records whose split is kTrain. Throws DataError with fewer than 2.
ClinicalStats fit_clinical_stats(const std::vector<ClinicalRecord>& records,
                                 const std::vector<ClinicalFeature>& features = {ClinicalFeature::kAge,
                                                                                 ClinicalFeature::kCa125},
                                 Ca125Scale ca125_scale = Ca125Scale::kRaw);

}  // namespace crs

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crs/metrics.hpp"
#include "crs/morphology.hpp"
#include "crs/training.hpp"

namespace crs {

inline constexpr const char* kToolVersion = "1.0.0";

/// "# key=value" lines at the top of every emitted file.
struct Provenance {
  std::vector<std::pair<std::string, std::string>> fields;

  Provenance& add(std::string key, std::string value);
  std::string header() const;
};

/// Writes bytes exactly as given; throws DataError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct ThresholdReport {
  std::string label;  // "tau_0.5", "tau_policy", ...
  double threshold = 0.5;
  std::vector<MetricSummary> summaries;
  Confusion confusion;
};

/// One row per threshold; for each metric the point value, bootstrap median and CI.
std::string metrics_csv(const Provenance& prov, const std::vector<ThresholdReport>& rows);
std::string confusion_csv(const Provenance& prov, const std::vector<ThresholdReport>& rows);
std::string roc_csv(const Provenance& prov, const RocResult& roc);
std::string reliability_csv(const Provenance& prov, const std::vector<ReliabilityBin>& bins);
std::string scores_csv(const Provenance& prov, const ScoredCohort& cohort);
std::string history_csv(const Provenance& prov, const TrainHistory& history);

struct MorphologyRow {
  std::string patient_id;
  int crs = 1;
  MorphologyRecord record;
};

std::string morphology_csv(const Provenance& prov, const std::vector<MorphologyRow>& rows);
/// Per-feature medians by CRS grade (rows: features, columns: CRS 1..3).
std::string morphology_summary_csv(const Provenance& prov, const std::vector<MorphologyRow>& rows);

struct AblationRow {
  std::string configuration;
  bool ct = false, age = false, ca125 = false, volume = false;
  MetricSummary auc;
};

std::string ablation_csv(const Provenance& prov, const std::vector<AblationRow>& rows);

struct Exclusion {
  std::string patient_id;
  std::string stage;
  std::string reason;
};

std::string exclusions_csv(const Provenance& prov, const std::vector<Exclusion>& rows);

/// Median of unsorted values (mean of the middle pair for even counts).
double median(std::vector<double> values);

}  // namespace crs

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crs {

struct ScoredPatient {
  std::string patient_id;
  double score = 0.0;  // predicted P(CRS 3)
  int label = 0;       // 1 = CRS 3
};

using ScoredCohort = std::vector<ScoredPatient>;

/// Throws DataError unless scores lie in [0,1], labels in {0,1} and ids are unique.
void validate(const ScoredCohort& cohort);

std::vector<double> scores_of(const ScoredCohort& cohort);
std::vector<int> labels_of(const ScoredCohort& cohort);

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
  std::size_t total() const { return tp + tn + fp + fn; }
  // Percentages relative to |P| (tp, fn) and |N| (tn, fp); empty when the class is absent.
  std::optional<double> tp_pct() const;
  std::optional<double> fn_pct() const;
  std::optional<double> tn_pct() const;
  std::optional<double> fp_pct() const;
};

/// Predicted positive iff score >= threshold.
Confusion confusion(std::span<const double> scores, std::span<const int> labels, double threshold);
inline Confusion confusion(const ScoredCohort& cohort, double threshold) {
  return confusion(scores_of(cohort), labels_of(cohort), threshold);
}

/// Undefined ratios (zero denominators) are empty, never 0.
struct ClassificationMetrics {
  std::optional<double> precision, recall, f1, accuracy;
};

ClassificationMetrics prf_accuracy(const Confusion& c);

/// Mann-Whitney AUC with ties counted 1/2, computed exactly from doubled midranks.
/// Empty when either class is missing.
std::optional<double> roc_auc_value(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0, tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0,0) starting point
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> curve;  // one point per distinct score, descending thresholds
};

/// Throws UndefinedMetricError on a single-class cohort.
RocResult roc_auc(const ScoredCohort& cohort);

/// Area under a ROC curve by the trapezoid rule.
double trapezoid_auc(std::span<const RocPoint> curve);

struct ThresholdPolicy {
  enum class Kind { kMaxF1, kPrecisionFloor, kFixed };
  Kind kind = Kind::kPrecisionFloor;
  double precision_floor = 0.75;
  double fixed_threshold = 0.69;

  static ThresholdPolicy max_f1() { return {Kind::kMaxF1}; }
  static ThresholdPolicy precision_at_least(double q) { return {Kind::kPrecisionFloor, q}; }
  static ThresholdPolicy fixed(double t) { return {Kind::kFixed, 0.75, t}; }
  /// "max_f1", "precision_floor(0.75)", "fixed(0.69)".
  std::string name() const;
};

/// Midpoints between adjacent distinct scores, plus 0 and 1, ascending.
std::vector<double> candidate_thresholds(std::span<const double> scores);

/// max_f1: candidate maximizing F1, ties to the larger threshold.
/// precision_floor(q): smallest candidate with precision >= q and TP >= 1
/// (the recall-maximizing feasible one); throws UndefinedMetricError if none.
/// Throws UndefinedMetricError if the cohort lacks a class (except for kFixed).
double optimize_threshold(const ScoredCohort& cohort, const ThresholdPolicy& policy);

enum class Metric { kAuc, kF1, kPrecision, kRecall, kAccuracy, kTpPct, kTnPct, kFpPct, kFnPct };

std::string to_string(Metric m);
const std::vector<Metric>& all_metrics();

/// Point value of a metric on a cohort at a threshold.
std::optional<double> metric_value(Metric m, std::span<const double> scores, std::span<const int> labels,
                                   double threshold);

struct MetricSummary {
  Metric metric = Metric::kAuc;
  std::optional<double> point;  // on the full cohort
  std::optional<double> median, ci_low, ci_high;
  std::size_t resamples = 0;
  std::size_t undefined = 0;  // resamples on which the metric had no value
};

struct BootstrapOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  /// When false, a metric undefined on every resample raises UndefinedMetricError.
  bool allow_undefined = false;
};

/// Patient-level percentile bootstrap. Resample b draws from its own stream
/// derived from (seed, b), so the result does not depend on evaluation order.
std::vector<MetricSummary> bootstrap(const ScoredCohort& cohort, double threshold, std::span<const Metric> metrics,
                                     const BootstrapOptions& options);

/// Linear-interpolation quantile of sorted values at position (n-1) q.
double quantile_sorted(std::span<const double> sorted, double q);

struct ReliabilityBin {
  double lo = 0.0, hi = 0.0;
  std::optional<double> mean_score;
  std::optional<double> fraction_positive;
  std::size_t count = 0;
};

/// Bin i covers [i/bins, (i+1)/bins), the last bin is closed at 1.
std::size_t reliability_bin_index(double score, std::size_t bins);
std::vector<ReliabilityBin> reliability(const ScoredCohort& cohort, std::size_t bins = 10);

}  // namespace crs

#include "crs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "crs/errors.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"

namespace crs {

void validate(const ScoredCohort& cohort) {
  std::unordered_set<std::string> ids;
  for (const auto& p : cohort) {
    if (!(p.score >= 0.0 && p.score <= 1.0)) throw DataError("score outside [0,1] for " + p.patient_id);
    if (p.label != 0 && p.label != 1) throw DataError("label must be 0 or 1 for " + p.patient_id);
    if (!ids.insert(p.patient_id).second) throw DataError("duplicate patient id " + p.patient_id);
  }
}

std::vector<double> scores_of(const ScoredCohort& cohort) {
  std::vector<double> s;
  s.reserve(cohort.size());
  for (const auto& p : cohort) s.push_back(p.score);
  return s;
}

std::vector<int> labels_of(const ScoredCohort& cohort) {
  std::vector<int> l;
  l.reserve(cohort.size());
  for (const auto& p : cohort) l.push_back(p.label);
  return l;
}

namespace {
std::optional<double> ratio(std::size_t num, std::size_t den, double scale = 1.0) {
  if (den == 0) return std::nullopt;
  return scale * static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

std::optional<double> Confusion::tp_pct() const { return ratio(tp, positives(), 100.0); }
std::optional<double> Confusion::fn_pct() const { return ratio(fn, positives(), 100.0); }
std::optional<double> Confusion::tn_pct() const { return ratio(tn, negatives(), 100.0); }
std::optional<double> Confusion::fp_pct() const { return ratio(fp, negatives(), 100.0); }

Confusion confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  return c;
}

ClassificationMetrics prf_accuracy(const Confusion& c) {
  ClassificationMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  return m;
}

std::optional<double> roc_auc_value(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::int64_t pos = 0;
  for (int y : labels) pos += (y == 1);
  const std::int64_t neg = static_cast<std::int64_t>(n) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of doubled midranks of the positives.
  std::int64_t rank2_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const auto doubled = static_cast<std::int64_t>(i + j + 1);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank2_sum += doubled;
    i = j;
  }
  const std::int64_t u2 = rank2_sum - pos * (pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * pos * neg);
}

RocResult roc_auc(const ScoredCohort& cohort) {
  const auto scores = scores_of(cohort);
  const auto labels = labels_of(cohort);
  const auto auc = roc_auc_value(scores, labels);
  if (!auc) throw UndefinedMetricError("AUC undefined: cohort contains a single class");
  RocResult r;
  r.auc = *auc;
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = static_cast<double>(labels.size()) - pos;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  r.curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    r.curve.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, t});
  }
  return r;
}

double trapezoid_auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].fpr - curve[i - 1].fpr) * 0.5 * (curve[i].tpr + curve[i - 1].tpr);
  return area;
}

std::string ThresholdPolicy::name() const {
  char buf[64];
  switch (kind) {
    case Kind::kMaxF1: return "max_f1";
    case Kind::kPrecisionFloor: std::snprintf(buf, sizeof buf, "precision_floor(%g)", precision_floor); return buf;
    case Kind::kFixed: std::snprintf(buf, sizeof buf, "fixed(%g)", fixed_threshold); return buf;
  }
  return "unknown";
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> c{0.0};
  for (std::size_t i = 1; i < s.size(); ++i) c.push_back(0.5 * (s[i - 1] + s[i]));
  c.push_back(1.0);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

double optimize_threshold(const ScoredCohort& cohort, const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::kFixed) return policy.fixed_threshold;
  const auto scores = scores_of(cohort);
  const auto labels = labels_of(cohort);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
    throw UndefinedMetricError("threshold optimization needs both classes");

  const auto candidates = candidate_thresholds(scores);
  if (policy.kind == ThresholdPolicy::Kind::kMaxF1) {
    // F1 = 2TP / (2TP + FP + FN); compared as exact fractions.
    std::optional<double> best;
    std::uint64_t best_num = 0, best_den = 1;
    for (double t : candidates) {
      const Confusion c = confusion(scores, labels, t);
      if (c.tp == 0) continue;
      const std::uint64_t num = 2 * c.tp, den = 2 * c.tp + c.fp + c.fn;
      if (!best || num * best_den >= best_num * den) {
        best = t;
        best_num = num;
        best_den = den;
      }
    }
    if (!best) throw UndefinedMetricError("F1 undefined at every candidate threshold");
    return *best;
  }
  for (double t : candidates) {
    const Confusion c = confusion(scores, labels, t);
    if (c.tp >= 1 && static_cast<double>(c.tp) >= policy.precision_floor * static_cast<double>(c.tp + c.fp)) return t;
  }
  throw UndefinedMetricError("precision floor " + policy.name() + " is unattainable");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kAuc: return "auc";
    case Metric::kF1: return "f1";
    case Metric::kPrecision: return "precision";
    case Metric::kRecall: return "recall";
    case Metric::kAccuracy: return "accuracy";
    case Metric::kTpPct: return "tp_pct";
    case Metric::kTnPct: return "tn_pct";
    case Metric::kFpPct: return "fp_pct";
    case Metric::kFnPct: return "fn_pct";
  }
  return "unknown";
}

const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> m{Metric::kAuc,    Metric::kF1,    Metric::kPrecision,
                                     Metric::kRecall, Metric::kAccuracy, Metric::kTpPct,
                                     Metric::kTnPct,  Metric::kFpPct, Metric::kFnPct};
  return m;
}

std::optional<double> metric_value(Metric m, std::span<const double> scores, std::span<const int> labels,
                                   double threshold) {
  if (m == Metric::kAuc) return roc_auc_value(scores, labels);
  const Confusion c = confusion(scores, labels, threshold);
  const ClassificationMetrics cm = prf_accuracy(c);
  switch (m) {
    case Metric::kF1: return cm.f1;
    case Metric::kPrecision: return cm.precision;
    case Metric::kRecall: return cm.recall;
    case Metric::kAccuracy: return cm.accuracy;
    case Metric::kTpPct: return c.tp_pct();
    case Metric::kTnPct: return c.tn_pct();
    case Metric::kFpPct: return c.fp_pct();
    case Metric::kFnPct: return c.fn_pct();
    default: return std::nullopt;
  }
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<MetricSummary> bootstrap(const ScoredCohort& cohort, double threshold, std::span<const Metric> metrics,
                                     const BootstrapOptions& options) {
  if (cohort.size() < 2) throw DataError("bootstrap needs at least 2 patients");
  if (options.resamples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
  const auto scores = scores_of(cohort);
  const auto labels = labels_of(cohort);
  const std::size_t n = cohort.size();

  // values[b][m]; NaN marks an undefined metric on that resample.
  std::vector<std::vector<double>> values(options.resamples);
  parallel_for(options.resamples, [&](std::size_t b) {
    Rng rng = Rng::derive(options.seed, stream::kBootstrap, b);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(rng.below(n));
      s[i] = scores[k];
      l[i] = labels[k];
    }
    auto& row = values[b];
    for (Metric m : metrics) row.push_back(metric_value(m, s, l, threshold).value_or(std::nan("")));
  });

  const double alpha = 0.5 * (1.0 - options.confidence);
  std::vector<MetricSummary> out;
  for (std::size_t j = 0; j < metrics.size(); ++j) {
    MetricSummary s;
    s.metric = metrics[j];
    s.point = metric_value(metrics[j], scores, labels, threshold);
    s.resamples = options.resamples;
    std::vector<double> v;
    for (const auto& row : values) {
      if (std::isnan(row[j])) ++s.undefined;
      else v.push_back(row[j]);
    }
    if (v.empty()) {
      if (!options.allow_undefined)
        throw UndefinedMetricError(to_string(metrics[j]) + " is undefined on every bootstrap resample");
    } else {
      std::sort(v.begin(), v.end());
      s.median = quantile_sorted(v, 0.5);
      s.ci_low = quantile_sorted(v, alpha);
      s.ci_high = quantile_sorted(v, 1.0 - alpha);
    }
    out.push_back(s);
  }
  return out;
}

std::size_t reliability_bin_index(double score, std::size_t bins) {
  std::size_t i = static_cast<std::size_t>(std::clamp(score, 0.0, 1.0) * static_cast<double>(bins));
  i = std::min(i, bins - 1);
  // Correct for rounding so that edge i/bins always opens bin i.
  while (i + 1 < bins && score >= static_cast<double>(i + 1) / static_cast<double>(bins)) ++i;
  while (i > 0 && score < static_cast<double>(i) / static_cast<double>(bins)) --i;
  return i;
}

std::vector<ReliabilityBin> reliability(const ScoredCohort& cohort, std::size_t bins) {
  if (bins == 0) throw ConfigError("reliability needs at least one bin");
  if (cohort.empty()) throw DataError("reliability of an empty cohort");
  std::vector<ReliabilityBin> out(bins);
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> positives(bins, 0);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = static_cast<double>(i) / static_cast<double>(bins);
    out[i].hi = static_cast<double>(i + 1) / static_cast<double>(bins);
  }
  for (const auto& p : cohort) {
    const std::size_t i = reliability_bin_index(p.score, bins);
    out[i].count++;
    sum[i] += p.score;
    positives[i] += (p.label == 1);
  }
  for (std::size_t i = 0; i < bins; ++i) {
    if (out[i].count == 0) continue;
    out[i].mean_score = sum[i] / static_cast<double>(out[i].count);
    out[i].fraction_positive = static_cast<double>(positives[i]) / static_cast<double>(out[i].count);
  }
  return out;
}

}  // namespace crs

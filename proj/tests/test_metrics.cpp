#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "crs/errors.hpp"
#include "crs/metrics.hpp"
#include "crs/rng.hpp"
#include "oracles.hpp"

namespace crs {
namespace {

ScoredCohort make_cohort(const std::vector<double>& scores, const std::vector<int>& labels) {
  ScoredCohort c;
  for (std::size_t i = 0; i < scores.size(); ++i) c.push_back({"P" + std::to_string(i), scores[i], labels[i]});
  return c;
}

TEST(Confusion, SpecExamples) {
  const std::vector<int> labels{1, 0, 1, 0, 0};
  const auto all_one = confusion(std::vector<double>(5, 1.0), labels, 0.5);
  EXPECT_EQ(all_one.tp, 2u);
  EXPECT_EQ(all_one.fp, 3u);
  EXPECT_EQ(all_one.tn + all_one.fn, 0u);
  const auto perfect = confusion(std::vector<double>{1, 0, 1, 0, 0}, labels, 0.5);
  EXPECT_EQ(perfect.fp + perfect.fn, 0u);
  EXPECT_NEAR(*perfect.tp_pct() + *perfect.fn_pct(), 100.0, 1e-12);
  EXPECT_NEAR(*all_one.tn_pct() + *all_one.fp_pct(), 100.0, 1e-12);
}

TEST(Confusion, MatchesTallyAndIsMonotone) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    oracle::random_cohort(rng, 5 + rng.below(60), s, y);
    std::size_t last_fp = s.size(), last_fn = 0;
    for (double t : {0.0, 0.1, 0.25, 0.5, 0.55, 0.9, 1.0}) {
      const auto c = confusion(s, y, t);
      const auto o = oracle::tally(s, y, t);
      EXPECT_EQ(c.tp, o.tp);
      EXPECT_EQ(c.tn, o.tn);
      EXPECT_EQ(c.fp, o.fp);
      EXPECT_EQ(c.fn, o.fn);
      EXPECT_LE(c.fp, last_fp);
      EXPECT_GE(c.fn, last_fn);
      last_fp = c.fp;
      last_fn = c.fn;
    }
  }
}

TEST(Prf, SpecExamples) {
  Confusion a;
  a.tp = 3;
  a.fp = 1;
  EXPECT_DOUBLE_EQ(*prf_accuracy(a).precision, 0.75);

  Confusion none;
  none.tn = 4;
  none.fn = 2;
  const auto m = prf_accuracy(none);
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_FALSE(m.f1.has_value());
  EXPECT_DOUBLE_EQ(*m.recall, 0.0);

  Confusion b;
  b.tp = 4;
  b.fp = 1;
  b.fn = 1;
  const auto mb = prf_accuracy(b);
  EXPECT_NEAR(*mb.precision, 0.8, 1e-15);
  EXPECT_NEAR(*mb.recall, 0.8, 1e-15);
  EXPECT_NEAR(*mb.f1, 0.8, 1e-15);
}

TEST(Prf, HarmonicMeanIdentity) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Confusion c;
    c.tp = rng.below(10);
    c.fp = rng.below(10);
    c.fn = rng.below(10);
    c.tn = rng.below(10);
    const auto m = prf_accuracy(c);
    if (m.f1 && m.precision && m.recall)
      EXPECT_NEAR(*m.f1 * (*m.precision + *m.recall), 2.0 * *m.precision * *m.recall, 1e-12);
  }
}

TEST(Auc, SpecExamples) {
  const auto perfect = make_cohort({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(roc_auc(perfect).auc, 1.0);
  const auto inverted = make_cohort({0.9, 0.8, 0.3, 0.2}, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(roc_auc(inverted).auc, 0.0);
  const auto tied = make_cohort({0.5, 0.5}, {1, 0});
  EXPECT_DOUBLE_EQ(roc_auc(tied).auc, 0.5);
  EXPECT_THROW(roc_auc(make_cohort({0.1, 0.2}, {1, 1})), UndefinedMetricError);
  EXPECT_FALSE(roc_auc_value(std::vector<double>{0.1}, std::vector<int>{0}).has_value());
}

TEST(Auc, MatchesPairwiseOracleWithTies) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    oracle::random_cohort(rng, 5 + rng.below(196), s, y, 1 + static_cast<int>(rng.below(30)));
    const auto expected = oracle::pairwise_auc(s, y);
    const auto roc = roc_auc(make_cohort(s, y));
    EXPECT_NEAR(roc.auc, *expected, 1e-12);
    EXPECT_NEAR(trapezoid_auc(roc.curve), *expected, 1e-12);
  }
}

TEST(Auc, CurveShape) {
  const auto roc = roc_auc(make_cohort({0.9, 0.7, 0.7, 0.2}, {1, 0, 1, 0}));
  ASSERT_EQ(roc.curve.size(), 4u);
  EXPECT_TRUE(std::isinf(roc.curve.front().threshold));
  EXPECT_DOUBLE_EQ(roc.curve.front().fpr, 0.0);
  EXPECT_DOUBLE_EQ(roc.curve.back().fpr, 1.0);
  EXPECT_DOUBLE_EQ(roc.curve.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.curve.size(); ++i) EXPECT_LT(roc.curve[i].threshold, roc.curve[i - 1].threshold);
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    oracle::random_cohort(rng, 10 + rng.below(100), s, y, 1000);
    const double base = *roc_auc_value(s, y);
    std::vector<double> cube(s), logistic(s);
    for (auto& v : cube) v = v * v * v;
    for (auto& v : logistic) v = 1.0 / (1.0 + std::exp(-(5.0 * v - 2.0)));
    EXPECT_NEAR(*roc_auc_value(cube, y), base, 1e-12);
    EXPECT_NEAR(*roc_auc_value(logistic, y), base, 1e-12);
  }
}

TEST(Threshold, SeparatedScores) {
  const auto c = make_cohort({0.9, 0.8, 0.7, 0.3, 0.2}, {1, 1, 1, 0, 0});
  // With two negatives, a 0.75 floor is already met one candidate below the gap.
  for (const auto& p : {ThresholdPolicy::max_f1(), ThresholdPolicy::precision_at_least(0.8)}) {
    const double t = optimize_threshold(c, p);
    EXPECT_GT(t, 0.3);
    EXPECT_LE(t, 0.7);
    EXPECT_DOUBLE_EQ(*prf_accuracy(confusion(c, t)).f1, 1.0);
  }
  EXPECT_DOUBLE_EQ(optimize_threshold(c, ThresholdPolicy::fixed(0.69)), 0.69);
}

TEST(Threshold, PoliciesMatchExhaustiveScan) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    oracle::random_cohort(rng, 10 + rng.below(80), s, y, 50);
    const auto cohort = make_cohort(s, y);
    const auto candidates = candidate_thresholds(s);

    double best_t = -1.0, best_f1 = -1.0;
    double floor_t = -1.0;
    for (double t : candidates) {
      const auto o = oracle::tally(s, y, t);
      if (o.tp > 0) {
        const double f1 = 2.0 * o.tp / (2.0 * o.tp + o.fp + o.fn);
        if (f1 >= best_f1 - 1e-15) {
          best_f1 = std::max(best_f1, f1);
          best_t = t;
        }
        if (floor_t < 0.0 && static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fp) >= 0.75) floor_t = t;
      }
    }
    EXPECT_DOUBLE_EQ(optimize_threshold(cohort, ThresholdPolicy::max_f1()), best_t);
    if (floor_t >= 0.0)
      EXPECT_DOUBLE_EQ(optimize_threshold(cohort, ThresholdPolicy::precision_at_least(0.75)), floor_t);
    else
      EXPECT_THROW(optimize_threshold(cohort, ThresholdPolicy::precision_at_least(0.75)), UndefinedMetricError);
  }
}

TEST(Threshold, CandidatesAreMidpoints) {
  const auto c = candidate_thresholds(std::vector<double>{0.2, 0.6, 0.2, 1.0});
  const std::vector<double> expected{0.0, 0.4, 0.8, 1.0};
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], expected[i], 1e-15);
  EXPECT_EQ(ThresholdPolicy::precision_at_least(0.75).name(), "precision_floor(0.75)");
  EXPECT_EQ(ThresholdPolicy::max_f1().name(), "max_f1");
}

TEST(Bootstrap, ConstantMetricCollapses) {
  const auto c = make_cohort({0.9, 0.8, 0.1, 0.2, 0.7, 0.05}, {1, 1, 0, 0, 1, 0});
  BootstrapOptions o;
  o.resamples = 200;
  o.seed = 3;
  const std::vector<Metric> m{Metric::kAccuracy};
  const auto s = bootstrap(c, 0.5, m, o);
  EXPECT_DOUBLE_EQ(*s[0].median, 1.0);
  EXPECT_DOUBLE_EQ(*s[0].ci_low, 1.0);
  EXPECT_DOUBLE_EQ(*s[0].ci_high, 1.0);
}

TEST(Bootstrap, QuantilesMatchSortOracle) {
  Rng rng(6);
  std::vector<double> s;
  std::vector<int> y;
  oracle::random_cohort(rng, 60, s, y, 40);
  const auto cohort = make_cohort(s, y);
  BootstrapOptions o;
  o.resamples = 1000;
  o.seed = 99;
  o.allow_undefined = true;
  const std::vector<Metric> metrics{Metric::kAuc, Metric::kAccuracy};
  const auto summary = bootstrap(cohort, 0.5, metrics, o);

  // Rebuild the resampled values with the oracles, using the documented per-resample streams.
  std::vector<double> aucs, accs;
  for (std::size_t b = 0; b < o.resamples; ++b) {
    Rng r = Rng::derive(o.seed, stream::kBootstrap, b);
    std::vector<double> rs(s.size());
    std::vector<int> ry(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto k = r.below(s.size());
      rs[i] = s[k];
      ry[i] = y[k];
    }
    if (auto a = oracle::pairwise_auc(rs, ry)) aucs.push_back(*a);
    const auto t = oracle::tally(rs, ry, 0.5);
    accs.push_back(static_cast<double>(t.tp + t.tn) / static_cast<double>(rs.size()));
  }
  EXPECT_EQ(summary[0].undefined, o.resamples - aucs.size());
  EXPECT_EQ(*summary[0].median, oracle::sorted_quantile(aucs, 0.5));
  EXPECT_EQ(*summary[0].ci_low, oracle::sorted_quantile(aucs, 0.025));
  EXPECT_EQ(*summary[0].ci_high, oracle::sorted_quantile(aucs, 0.975));
  EXPECT_EQ(*summary[1].ci_low, oracle::sorted_quantile(accs, 0.025));
  EXPECT_EQ(*summary[1].ci_high, oracle::sorted_quantile(accs, 0.975));
}

TEST(Bootstrap, DeterministicAndBracketing) {
  Rng rng(7);
  std::vector<double> s;
  std::vector<int> y;
  oracle::random_cohort(rng, 40, s, y, 30);
  const auto cohort = make_cohort(s, y);
  BootstrapOptions o;
  o.resamples = 300;
  o.seed = 5;
  o.allow_undefined = true;
  const auto a = bootstrap(cohort, 0.5, all_metrics(), o);
  const auto b = bootstrap(cohort, 0.5, all_metrics(), o);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].median, b[i].median);
    EXPECT_EQ(a[i].ci_low, b[i].ci_low);
    if (a[i].median) {
      EXPECT_LE(*a[i].ci_low, *a[i].median);
      EXPECT_LE(*a[i].median, *a[i].ci_high);
    }
  }
}

TEST(Bootstrap, RejectsDegenerateInputs) {
  const auto c = make_cohort({0.9, 0.8}, {1, 1});
  BootstrapOptions o;
  const std::vector<Metric> auc{Metric::kAuc};
  EXPECT_THROW(bootstrap(c, 0.5, auc, o), UndefinedMetricError);
  o.allow_undefined = true;
  const auto s = bootstrap(c, 0.5, auc, o);
  EXPECT_FALSE(s[0].median.has_value());
  EXPECT_EQ(s[0].undefined, o.resamples);
  o.resamples = 50;
  EXPECT_THROW(bootstrap(c, 0.5, auc, o), ConfigError);
  EXPECT_THROW(bootstrap(make_cohort({0.5}, {1}), 0.5, auc, BootstrapOptions{}), DataError);
}

TEST(Quantile, SortedInterpolation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  Rng rng(8);
  std::vector<double> x(101);
  for (auto& e : x) e = rng.normal();
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.025, 0.1, 0.5, 0.9, 0.975}) EXPECT_EQ(quantile_sorted(sorted, q), oracle::sorted_quantile(x, q));
}

TEST(Reliability, SpecExamples) {
  const auto low = make_cohort(std::vector<double>(5, 0.05), std::vector<int>(5, 0));
  const auto bins = reliability(low, 10);
  ASSERT_EQ(bins.size(), 10u);
  EXPECT_EQ(bins[0].count, 5u);
  EXPECT_DOUBLE_EQ(*bins[0].fraction_positive, 0.0);
  EXPECT_EQ(bins[5].count, 0u);
  EXPECT_FALSE(bins[5].mean_score.has_value());
}

TEST(Reliability, BoundaryValues) {
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(reliability_bin_index(i / 10.0, 10), i) << i;
  EXPECT_EQ(reliability_bin_index(1.0, 10), 9u);
  EXPECT_EQ(reliability_bin_index(0.3 - 1e-12, 10), 2u);
}

TEST(Reliability, CalibratedScoresAreCalibrated) {
  Rng rng(9);
  ScoredCohort c;
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform();
    c.push_back({"P" + std::to_string(i), p, rng.bernoulli(p) ? 1 : 0});
  }
  double worst = 0.0;
  for (const auto& b : reliability(c, 10))
    if (b.count) worst = std::max(worst, std::abs(*b.mean_score - *b.fraction_positive));
  EXPECT_LT(worst, 0.03);
}

TEST(Validate, RejectsBadCohorts) {
  EXPECT_THROW(validate(make_cohort({1.5}, {1})), DataError);
  EXPECT_THROW(validate(make_cohort({0.5}, {2})), DataError);
  ScoredCohort dup{{"A", 0.1, 0}, {"A", 0.2, 1}};
  EXPECT_THROW(validate(dup), DataError);
}

}  // namespace
}  // namespace crs

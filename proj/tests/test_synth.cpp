#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <gtest/gtest.h>

#include "crs/ablation.hpp"
#include "crs/checksum.hpp"
#include "crs/errors.hpp"
#include "crs/manifest.hpp"
#include "crs/metrics.hpp"
#include "crs/morphology.hpp"
#include "crs/rvol.hpp"
#include "crs/synth.hpp"
#include "test_util.hpp"

namespace crs {
namespace {

SynthConfig small_config(std::size_t n, std::uint64_t seed) {
  SynthConfig c;
  c.n_patients = n;
  c.seed = seed;
  c.grid = {24, 24, 12};
  c.spacing = {4.0, 4.0, 8.0};
  c.radius_min_mm = 6.0;
  c.radius_max_mm = 12.0;
  return c;
}

TEST(Synth, SingleLesionVolumeMatchesSphere) {
  SynthConfig c;
  c.n_patients = 1;
  c.seed = 1;
  c.grid = {32, 32, 32};
  c.spacing = {1.0, 1.0, 1.0};
  c.lesions_min = c.lesions_max = 1;
  c.radius_min_mm = c.radius_max_mm = 10.0;
  const auto image = synth_image(c, 0, false);
  const double expected = 4.0 / 3.0 * std::numbers::pi * 1000.0 / 1000.0;
  EXPECT_NEAR(expected, 4.19, 0.01);
  EXPECT_LT(std::abs(tumor_volume(image.mask) - expected) / expected, 0.02);
  const auto cohort = simulate_cohort(c);
  EXPECT_DOUBLE_EQ(cohort.patients[0].features.lesion_volume_cm3, tumor_volume(image.mask));
  EXPECT_EQ(cohort.patients[0].lesion_count, 1u);
}

TEST(Synth, MaskLiesInsideLesionIntensities) {
  const auto c = small_config(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto image = synth_image(c, i, false);
    ASSERT_EQ(image.volume.geom, image.mask.geom);
    std::size_t lesion_voxels = 0;
    for (std::size_t k = 0; k < image.mask.data.size(); ++k) {
      const float hu = image.volume.data[k];
      if (image.mask.data[k]) {
        ++lesion_voxels;
        EXPECT_GE(hu, c.lesion_hu_min);
        EXPECT_LE(hu, c.lesion_hu_max);
      } else {
        EXPECT_EQ(hu, static_cast<float>(c.background_hu));
      }
    }
    EXPECT_GT(lesion_voxels, 0u);
  }
}

TEST(Synth, ExternalPatientsAreShifted) {
  auto c = small_config(3, 3);
  const auto internal = synth_image(c, 0, false);
  const auto external = synth_image(c, 0, true);
  EXPECT_NE(internal.volume.data, external.volume.data);
  for (std::size_t k = 0; k < external.mask.data.size(); ++k)
    if (!external.mask.data[k]) {
      EXPECT_EQ(external.volume.data[k], static_cast<float>(c.background_hu + c.external_hu_shift));
      break;
    }
}

TEST(Synth, ZeroNoiseIsDeterministicInFeatures) {
  auto c = small_config(200, 4);
  c.noise = 0.0;
  const auto cohort = simulate_cohort(c);
  for (const auto& p : cohort.patients) {
    const double logit = cohort.intercept + synth_linear_predictor(p.features, c);
    if (logit > 0) EXPECT_EQ(p.label, 1);
    if (logit < 0) EXPECT_EQ(p.label, 0);
    EXPECT_EQ(p.oracle, logit > 0 ? 1.0 : (logit < 0 ? 0.0 : 0.5));
  }
}

TEST(Synth, ZeroCoefficientsGiveConstantOracle) {
  auto c = small_config(50, 5);
  c.volume_effect = c.ca125_effect = c.age_effect = 0.0;
  c.prior = 0.5;
  const auto cohort = simulate_cohort(c);
  for (const auto& p : cohort.patients) EXPECT_NEAR(p.oracle, 0.5, 1e-12);
}

TEST(Synth, OracleDecreasesWithVolume) {
  const auto c = small_config(10, 6);
  SynthFeatures f{5.0, 60.0, 900.0};
  double last = 1.0;
  for (double v : {1.0, 2.0, 5.0, 10.0, 40.0, 100.0}) {
    f.lesion_volume_cm3 = v;
    const double p = oracle_score(f, c, 0.3);
    EXPECT_LT(p, last);
    last = p;
  }
}

TEST(Synth, PriorIsCalibrated) {
  auto c = small_config(1000, 7);
  c.grid = {16, 16, 8};
  c.spacing = {5.0, 5.0, 10.0};
  c.radius_min_mm = 5.0;
  c.radius_max_mm = 10.0;
  const auto cohort = simulate_cohort(c);
  double positives = 0.0, expected = 0.0;
  for (const auto& p : cohort.patients) {
    positives += p.label;
    expected += p.oracle;
  }
  EXPECT_NEAR(expected / 1000.0, c.prior, 1e-6);
  EXPECT_NEAR(positives / 1000.0, c.prior, 0.03);
}

TEST(Synth, SplitsAndLabelsFollowConfig) {
  auto c = small_config(80, 8);
  c.n_external = 12;
  const auto cohort = simulate_cohort(c);
  ASSERT_EQ(cohort.patients.size(), 92u);
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& p : cohort.patients) {
    ++counts[static_cast<int>(p.record.split)];
    EXPECT_EQ(response_label(p.record.crs), p.label);
    validate(p.record);
  }
  EXPECT_EQ(counts[static_cast<int>(Split::kVal)], 10u);
  EXPECT_EQ(counts[static_cast<int>(Split::kTest)], 10u);
  EXPECT_EQ(counts[static_cast<int>(Split::kTrain)], 60u);
  EXPECT_EQ(counts[static_cast<int>(Split::kExternal)], 12u);
  EXPECT_EQ(cohort.patients.front().record.patient_id, "SYN0001");
  EXPECT_EQ(cohort.patients.back().record.patient_id, "EXT0012");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Synth, GeneratedFilesAreByteIdentical) {
  testing::TempDir dir;
  auto c = small_config(6, 9);
  c.n_external = 2;
  const auto a = generate_cohort(c, dir / "a");
  generate_cohort(c, dir / "b");
  for (const std::string f : {"manifest.csv", "oracle.csv", "volumes/SYN0003.rvol", "masks/EXT0002.rvol"})
    EXPECT_EQ(file_checksum(dir / ("a/" + f)), file_checksum(dir / ("b/" + f))) << f;

  const Cohort m = read_manifest(dir / "a/manifest.csv");
  ASSERT_EQ(m.entries.size(), 8u);
  const auto image = synth_image(c, 2, false);
  EXPECT_EQ(read_volume(m.resolve(m.entries[2].volume_path)).data, image.volume.data);
  EXPECT_EQ(read_mask(m.resolve(m.entries[2].mask_path)).data, image.mask.data);
  EXPECT_NE(slurp(dir / "a/manifest.csv").find("xoshiro256**"), std::string::npos);
  EXPECT_EQ(a.patients[2].record.age, m.entries[2].record.age);

  c.seed = 10;
  generate_cohort(c, dir / "c");
  EXPECT_NE(file_checksum(dir / "a/manifest.csv"), file_checksum(dir / "c/manifest.csv"));
}

TEST(Synth, RejectsImpossibleSettings) {
  auto c = small_config(10, 11);
  c.radius_max_mm = 60.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("invalid radius range"), std::string::npos);
  }
  c = small_config(10, 11);
  c.noise = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(10, 11);
  c.prior = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(10, 11);
  c.lesions_min = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

// The generative probability should rank at least as well as a model fitted to
// the same observable features, on average over seeds.
TEST(Synth, OracleOutranksFittedModel) {
  double oracle_sum = 0.0, model_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cohort = simulate_cohort(small_config(200, 100 + seed));
    std::vector<std::vector<double>> x_train;
    std::vector<int> y_train;
    std::vector<double> oracle, model;
    std::vector<int> y_test;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
      const auto& p = cohort.patients[i];
      const auto x = baseline_features(p.record, p.features.lesion_volume_cm3);
      if (i % 2 == 0) {
        x_train.push_back(x);
        y_train.push_back(p.label);
      } else {
        y_test.push_back(p.label);
        oracle.push_back(p.oracle);
      }
    }
    const auto fit = fit_logistic(x_train, y_train, 1e-2);
    for (std::size_t i = 1; i < cohort.patients.size(); i += 2) {
      const auto& p = cohort.patients[i];
      model.push_back(fit.predict(baseline_features(p.record, p.features.lesion_volume_cm3)));
    }
    oracle_sum += *roc_auc_value(oracle, y_test);
    model_sum += *roc_auc_value(model, y_test);
  }
  EXPECT_GE(oracle_sum / 20.0, model_sum / 20.0);
}

}  // namespace
}  // namespace crs

#include "crs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crs/errors.hpp"
#include "crs/manifest.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"
#include "crs/rvol.hpp"
#include "crs/strings.hpp"

namespace crs {

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double link(double logit, double noise) {
  if (noise > 0.0) return sigmoid(logit / noise);
  return logit > 0.0 ? 1.0 : (logit < 0.0 ? 0.0 : 0.5);
}

struct Ellipsoid {
  Vec3 center;
  Vec3 radii;
  double hu;
};

// Everything drawn for a patient, in a fixed order from its own stream.
struct Draws {
  std::vector<Ellipsoid> lesions;
  double age = 0.0;
  double ca125 = 0.0;
  double noise_draw = 0.0;
  int low_grade = 1;
};

Draws draw_patient(const SynthConfig& c, std::size_t index, bool external) {
  Rng rng = Rng::derive(c.seed, external ? stream::kSynthExternal : stream::kSynthPatient, index);
  Geometry g{c.grid, c.spacing, {0.0, 0.0, 0.0}};
  Draws d;
  const std::size_t count = c.lesions_min + rng.below(c.lesions_max - c.lesions_min + 1);
  for (std::size_t l = 0; l < count; ++l) {
    Ellipsoid e{};
    for (int a = 0; a < 3; ++a) e.radii[a] = rng.uniform(c.radius_min_mm, c.radius_max_mm);
    for (int a = 0; a < 3; ++a) {
      const double lo = g.lower(a) + e.radii[a] + c.spacing[a];
      const double hi = g.upper(a) - e.radii[a] - c.spacing[a];
      e.center[a] = rng.uniform(lo, hi);
    }
    e.hu = rng.uniform(c.lesion_hu_min, c.lesion_hu_max) + (external ? c.external_hu_shift : 0.0);
    d.lesions.push_back(e);
  }
  d.age = std::clamp(rng.normal(c.age_mean, c.age_sd), c.age_min, c.age_max);
  d.ca125 = c.ca125_median * std::exp(c.ca125_log_sd * rng.normal()) * (external ? c.external_ca125_scale : 1.0);
  d.noise_draw = rng.logistic();
  d.low_grade = rng.bernoulli(0.5) ? 2 : 1;
  return d;
}

SynthImage rasterize(const SynthConfig& c, const Draws& d, bool external) {
  Geometry g{c.grid, c.spacing, {0.0, 0.0, 0.0}};
  SynthImage img{CtVolume(g, static_cast<float>(c.background_hu + (external ? c.external_hu_shift : 0.0))),
                 LesionMask(g, 0)};
  for (const Ellipsoid& e : d.lesions) {
    // Bounding box in voxel indices.
    std::array<std::size_t, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const double first = std::ceil((e.center[a] - e.radii[a]) / c.spacing[a]);
      const double last = std::floor((e.center[a] + e.radii[a]) / c.spacing[a]);
      lo[a] = static_cast<std::size_t>(std::max(0.0, first));
      hi[a] = static_cast<std::size_t>(std::clamp(last, 0.0, static_cast<double>(c.grid[a] - 1)));
    }
    for (std::size_t z = lo[2]; z <= hi[2]; ++z)
      for (std::size_t y = lo[1]; y <= hi[1]; ++y)
        for (std::size_t x = lo[0]; x <= hi[0]; ++x) {
          const double dx = (static_cast<double>(x) * c.spacing[0] - e.center[0]) / e.radii[0];
          const double dy = (static_cast<double>(y) * c.spacing[1] - e.center[1]) / e.radii[1];
          const double dz = (static_cast<double>(z) * c.spacing[2] - e.center[2]) / e.radii[2];
          if (dx * dx + dy * dy + dz * dz > 1.0) continue;
          img.volume.at(x, y, z) = static_cast<float>(e.hu);
          img.mask.at(x, y, z) = 1;
        }
  }
  return img;
}

std::string patient_id(std::size_t index, bool external) {
  std::ostringstream os;
  os << (external ? "EXT" : "SYN");
  const std::string n = std::to_string(index + 1);
  os << std::string(n.size() < 4 ? 4 - n.size() : 0, '0') << n;
  return os.str();
}

double solve_intercept(const SynthConfig& c, const std::vector<double>& linear) {
  const auto [mn, mx] = std::minmax_element(linear.begin(), linear.end());
  if (*mn == *mx) {
    const double logit_prior = std::log(c.prior / (1.0 - c.prior));
    return (c.noise > 0.0 ? c.noise * logit_prior : 0.0) - *mn;
  }
  auto expected = [&](double b) {
    double s = 0.0;
    for (double l : linear) s += link(b + l, c.noise);
    return s / static_cast<double>(linear.size());
  };
  double lo = -100.0, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < c.prior ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Generated {
  Draws draws;
  SynthFeatures features;
};

SynthCohort build(const SynthConfig& c, const std::filesystem::path* dir) {
  c.validate();
  const std::size_t total = c.n_patients + c.n_external;
  std::vector<Generated> gen(total);
  const double voxel_cm3 = c.spacing[0] * c.spacing[1] * c.spacing[2] / 1000.0;
  parallel_for(total, [&](std::size_t i) {
    const bool external = i >= c.n_patients;
    const std::size_t local = external ? i - c.n_patients : i;
    Draws d = draw_patient(c, local, external);
    const SynthImage img = rasterize(c, d, external);
    const auto voxels = std::count(img.mask.data.begin(), img.mask.data.end(), std::uint8_t{1});
    gen[i].features = {static_cast<double>(voxels) * voxel_cm3, d.age, d.ca125};
    gen[i].draws = std::move(d);
    if (dir) {
      const std::string id = patient_id(local, external);
      write_volume(*dir / "volumes" / (id + ".rvol"), img.volume, {{"patient_id", id}});
      write_mask(*dir / "masks" / (id + ".rvol"), img.mask, {{"patient_id", id}});
    }
  });

  std::vector<double> linear(c.n_patients);
  for (std::size_t i = 0; i < c.n_patients; ++i) linear[i] = synth_linear_predictor(gen[i].features, c);

  SynthCohort cohort;
  cohort.intercept = solve_intercept(c, linear);

  std::vector<Split> splits(c.n_patients, Split::kTrain);
  {
    std::vector<std::size_t> order(c.n_patients);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(c.seed, stream::kSynthSplit, 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_val = static_cast<std::size_t>(std::llround(c.val_fraction * static_cast<double>(c.n_patients)));
    const auto n_test = static_cast<std::size_t>(std::llround(c.test_fraction * static_cast<double>(c.n_patients)));
    for (std::size_t k = 0; k < n_val + n_test && k < order.size(); ++k)
      splits[order[k]] = k < n_val ? Split::kVal : Split::kTest;
  }

  for (std::size_t i = 0; i < total; ++i) {
    const bool external = i >= c.n_patients;
    const std::size_t local = external ? i - c.n_patients : i;
    const Generated& g = gen[i];
    SynthPatient p;
    p.features = g.features;
    p.lesion_count = g.draws.lesions.size();
    const double logit = cohort.intercept + synth_linear_predictor(g.features, c);
    p.oracle = link(logit, c.noise);
    p.label = logit + c.noise * g.draws.noise_draw > 0.0 ? 1 : 0;
    p.record.patient_id = patient_id(local, external);
    p.record.age = g.features.age;
    p.record.ca125 = g.features.ca125;
    p.record.crs = p.label == 1 ? 3 : g.draws.low_grade;
    p.record.split = external ? Split::kExternal : splits[i];
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_patients < 1) throw ConfigError("synth: n_patients must be >= 1");
  if (val_fraction < 0.0 || test_fraction < 0.0 || val_fraction + test_fraction >= 1.0)
    throw ConfigError("synth: val/test fractions must be >= 0 and sum to < 1");
  for (int a = 0; a < 3; ++a) {
    if (grid[a] < 1) throw ConfigError("synth: grid dims must be >= 1");
    if (!(spacing[a] > 0.0)) throw ConfigError("synth: spacing must be > 0");
  }
  if (lesions_min < 1 || lesions_max < lesions_min) throw ConfigError("synth: invalid lesion count range");
  if (!(radius_min_mm > 0.0) || radius_max_mm < radius_min_mm) throw ConfigError("synth: invalid radius range");
  for (int a = 0; a < 3; ++a) {
    const double extent = static_cast<double>(grid[a]) * spacing[a];
    if (2.0 * radius_max_mm + 3.0 * spacing[a] > extent)
      throw ConfigError("synth: invalid radius range: lesions of radius " + format_double(radius_max_mm) +
                        " mm do not fit the grid");
  }
  if (lesion_hu_max < lesion_hu_min) throw ConfigError("synth: invalid lesion HU range");
  if (age_sd < 0.0 || age_min >= age_max || age_min <= 0.0 || age_max >= 130.0)
    throw ConfigError("synth: invalid age distribution");
  if (!(ca125_median > 0.0) || ca125_log_sd < 0.0 || !(external_ca125_scale > 0.0))
    throw ConfigError("synth: invalid CA-125 distribution");
  if (!(noise >= 0.0)) throw ConfigError("synth: noise must be >= 0");
  if (!(prior > 0.0 && prior < 1.0)) throw ConfigError("synth: prior must lie in (0, 1)");
  if (!(volume_center_cm3 > 0.0) || !(volume_log_scale > 0.0)) throw ConfigError("synth: invalid volume reference");
  for (double v : {volume_effect, ca125_effect, age_effect})
    if (!std::isfinite(v)) throw ConfigError("synth: effects must be finite");
}

double synth_linear_predictor(const SynthFeatures& f, const SynthConfig& c) {
  const double zv = std::log(f.lesion_volume_cm3 / c.volume_center_cm3) / c.volume_log_scale;
  const double zc = c.ca125_log_sd > 0.0 ? std::log(f.ca125 / c.ca125_median) / c.ca125_log_sd : 0.0;
  const double za = c.age_sd > 0.0 ? (f.age - c.age_mean) / c.age_sd : 0.0;
  double s = 0.0;
  if (c.volume_effect != 0.0) s += c.volume_effect * zv;
  if (c.ca125_effect != 0.0) s += c.ca125_effect * zc;
  if (c.age_effect != 0.0) s += c.age_effect * za;
  return s;
}

double oracle_score(const SynthFeatures& f, const SynthConfig& c, double intercept) {
  return link(intercept + synth_linear_predictor(f, c), c.noise);
}

SynthImage synth_image(const SynthConfig& config, std::size_t index, bool external) {
  config.validate();
  return rasterize(config, draw_patient(config, index, external), external);
}

SynthCohort simulate_cohort(const SynthConfig& config) { return build(config, nullptr); }

SynthCohort generate_cohort(const SynthConfig& config, const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::filesystem::create_directories(dir / "volumes");
  std::filesystem::create_directories(dir / "masks");
  SynthCohort cohort = build(config, &dir);

  std::vector<CohortEntry> entries;
  for (const auto& p : cohort.patients) {
    const std::string file = p.record.patient_id + ".rvol";
    entries.push_back({p.record, std::filesystem::path("volumes") / file, std::filesystem::path("masks") / file});
  }
  auto prov = provenance;
  prov.emplace_back("rng", Rng::kAlgorithm);
  prov.emplace_back("synth_seed", std::to_string(config.seed));
  prov.emplace_back("intercept", format_double(cohort.intercept));
  write_manifest(dir / "manifest.csv", entries, prov);

  std::ostringstream os;
  for (const auto& [k, v] : prov) os << "# " << k << "=" << v << "\n";
  os << "patient_id,lesion_count,lesion_volume_cm3,oracle_score,label\n";
  for (const auto& p : cohort.patients)
    os << p.record.patient_id << ',' << p.lesion_count << ',' << format_double(p.features.lesion_volume_cm3) << ','
       << format_double(p.oracle) << ',' << p.label << "\n";
  std::ofstream out(dir / "oracle.csv", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "oracle.csv").string());
  out << os.str();
  return cohort;
}

}  // namespace crs

#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "crs/errors.hpp"
#include "crs/rng.hpp"
#include "crs/rvol.hpp"
#include "crs/volume.hpp"
#include "test_util.hpp"

namespace crs {
namespace {

CtVolume make_volume(Dims3 dims, Vec3 spacing, Vec3 origin = {0, 0, 0}) {
  return CtVolume(Geometry{dims, spacing, origin}, 0.0f);
}

template <typename F>
void fill(CtVolume& v, F f) {
  const auto& g = v.geom;
  for (std::size_t z = 0; z < g.dims[2]; ++z)
    for (std::size_t y = 0; y < g.dims[1]; ++y)
      for (std::size_t x = 0; x < g.dims[0]; ++x)
        v.at(x, y, z) = static_cast<float>(f(g.origin[0] + x * g.spacing[0], g.origin[1] + y * g.spacing[1],
                                             g.origin[2] + z * g.spacing[2]));
}

// Physical coordinate of a voxel centre lies between the first and last source centres.
bool interior(const Geometry& src, const Geometry& dst, std::size_t x, std::size_t y, std::size_t z) {
  const std::size_t idx[3] = {x, y, z};
  for (int a = 0; a < 3; ++a) {
    const double p = dst.origin[a] + idx[a] * dst.spacing[a];
    const double lo = src.origin[a], hi = src.origin[a] + (src.dims[a] - 1) * src.spacing[a];
    if (p < lo - 1e-9 || p > hi + 1e-9) return false;
  }
  return true;
}

TEST(Resample, ConstantVolumeIsPreserved) {
  CtVolume v = make_volume({21, 17, 6}, {0.7, 0.7, 5.0});
  std::fill(v.data.begin(), v.data.end(), 50.0f);
  const CtVolume out = resample_isotropic(v);
  EXPECT_EQ(out.geom.spacing, (Vec3{1.0, 1.0, 1.0}));
  EXPECT_EQ(out.geom.dims, (Dims3{15, 12, 30}));
  for (float x : out.data) EXPECT_LE(std::abs(x - 50.0f), 1e-6);
}

TEST(Resample, ShapeLaw) {
  CtVolume v = make_volume({10, 10, 10}, {2, 2, 2});
  const CtVolume out = resample_isotropic(v);
  EXPECT_EQ(out.geom.dims, (Dims3{20, 20, 20}));
  EXPECT_EQ(out.geom.spacing, (Vec3{1, 1, 1}));
}

TEST(Resample, LinearRampMatchesAnalyticValuesInInterior) {
  CtVolume v = make_volume({12, 9, 7}, {1.3, 0.8, 3.0}, {-4.0, 2.0, 10.0});
  auto ramp = [](double x, double y, double z) { return 0.25 * x - 0.5 * y + z; };
  fill(v, ramp);
  const CtVolume out = resample_isotropic(v);
  const auto& g = out.geom;
  std::size_t checked = 0;
  for (std::size_t z = 0; z < g.dims[2]; ++z)
    for (std::size_t y = 0; y < g.dims[1]; ++y)
      for (std::size_t x = 0; x < g.dims[0]; ++x) {
        if (!interior(v.geom, g, x, y, z)) continue;
        const double expect =
            ramp(g.origin[0] + x * g.spacing[0], g.origin[1] + y * g.spacing[1], g.origin[2] + z * g.spacing[2]);
        EXPECT_NEAR(out.at(x, y, z), expect, 1e-5 * std::max(1.0, std::abs(expect)));
        ++checked;
      }
  EXPECT_GT(checked, 100u);
}

TEST(Resample, RoundTripOfConstantVolume) {
  CtVolume v = make_volume({8, 8, 4}, {2, 2, 2});
  std::fill(v.data.begin(), v.data.end(), -20.0f);
  const CtVolume back = resample_isotropic(resample_isotropic(v, 1.0), 2.0);
  ASSERT_EQ(back.geom.dims, v.geom.dims);
  for (float x : back.data) EXPECT_LE(std::abs(x + 20.0f), 1e-6);
}

TEST(Resample, RejectsNonPositiveTarget) {
  CtVolume v = make_volume({2, 2, 2}, {1, 1, 1});
  EXPECT_THROW(resample_isotropic(v, 0.0), ConfigError);
}

TEST(ResizeToGrid, IdentityOnTargetGrid) {
  CtVolume v = make_volume({224, 224, 128}, {1, 1, 1});
  Rng rng(3);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(-100, 100));
  const CtVolume out = resize_to_grid(v);
  ASSERT_EQ(out.geom, v.geom);
  for (std::size_t i = 0; i < v.data.size(); ++i) ASSERT_LE(std::abs(out.data[i] - v.data[i]), 1e-6);
}

TEST(ResizeToGrid, RampUpsamplingMatchesAnalyticValues) {
  CtVolume v = make_volume({112, 112, 64}, {2, 2, 2});
  auto ramp = [](double x, double y, double z) { return 0.01 * x + 0.02 * y - 0.03 * z; };
  fill(v, ramp);
  const CtVolume out = resize_to_grid(v);
  EXPECT_EQ(out.geom.dims, kModelGrid);
  EXPECT_EQ(out.geom.spacing, (Vec3{1, 1, 1}));
  const auto& g = out.geom;
  for (std::size_t z = 0; z < g.dims[2]; z += 3)
    for (std::size_t y = 0; y < g.dims[1]; y += 5)
      for (std::size_t x = 0; x < g.dims[0]; x += 5) {
        if (!interior(v.geom, g, x, y, z)) continue;
        const double expect =
            ramp(g.origin[0] + x * g.spacing[0], g.origin[1] + y * g.spacing[1], g.origin[2] + z * g.spacing[2]);
        ASSERT_NEAR(out.at(x, y, z), expect, 1e-5);
      }
}

TEST(ResizeToGrid, SpacingIsExtentOverTarget) {
  CtVolume v = make_volume({50, 40, 30}, {0.8, 0.9, 2.5});
  std::fill(v.data.begin(), v.data.end(), 7.0f);
  const CtVolume out = resize_to_grid(v, {25, 20, 10});
  EXPECT_DOUBLE_EQ(out.geom.spacing[0], 1.6);
  EXPECT_DOUBLE_EQ(out.geom.spacing[1], 1.8);
  EXPECT_DOUBLE_EQ(out.geom.spacing[2], 7.5);
  for (float x : out.data) EXPECT_FLOAT_EQ(x, 7.0f);
}

TEST(Window, EndpointsCentreAndInterior) {
  CtVolume v = make_volume({5, 1, 1}, {1, 1, 1});
  v.data = {-160.0f, 240.0f, 40.0f, 140.0f, -1000.0f};
  const CtVolume w = window_soft_tissue(v);
  EXPECT_FLOAT_EQ(w.data[0], 0.0f);
  EXPECT_FLOAT_EQ(w.data[1], 1.0f);
  EXPECT_FLOAT_EQ(w.data[2], 0.5f);
  EXPECT_FLOAT_EQ(w.data[3], 0.75f);
  EXPECT_FLOAT_EQ(w.data[4], 0.0f);
  EXPECT_THROW(window_soft_tissue(v, 40, 0), ConfigError);
  EXPECT_THROW(window_soft_tissue(v, 40, -5), ConfigError);
}

TEST(Window, MonotoneAndIdempotentOnNormalizedData) {
  CtVolume v = make_volume({200, 1, 1}, {1, 1, 1});
  for (std::size_t i = 0; i < 200; ++i) v.data[i] = -300.0f + 3.0f * static_cast<float>(i);
  const CtVolume w = window_soft_tissue(v);
  for (std::size_t i = 1; i < 200; ++i) EXPECT_GE(w.data[i], w.data[i - 1]);
  const CtVolume again = window_soft_tissue(w, 0.5, 1.0);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_FLOAT_EQ(again.data[i], w.data[i]);
}

TEST(AlignMask, IdentityOnSameGrid) {
  LesionMask m(Geometry{{6, 5, 4}, {1, 1, 2}, {0, 0, 0}}, 0);
  Rng rng(5);
  for (auto& x : m.data) x = rng.bernoulli(0.3) ? 1 : 0;
  const LesionMask out = align_mask(m, m.geom);
  EXPECT_EQ(out.data, m.data);
}

TEST(AlignMask, DownsamplingSolidCube) {
  // 8^3 cube inside a 16^3 mask at 1 mm -> 4^3 cube inside 8^3 at 2 mm.
  LesionMask m(Geometry{{16, 16, 16}, {1, 1, 1}, {0, 0, 0}}, 0);
  for (std::size_t z = 4; z < 12; ++z)
    for (std::size_t y = 4; y < 12; ++y)
      for (std::size_t x = 4; x < 12; ++x) m.at(x, y, z) = 1;
  const Geometry target{{8, 8, 8}, {2, 2, 2}, {0.5, 0.5, 0.5}};
  const LesionMask out = align_mask(m, target);
  std::size_t ones = 0;
  for (std::size_t z = 0; z < 8; ++z)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) {
        const bool inside = x >= 2 && x < 6 && y >= 2 && y < 6 && z >= 2 && z < 6;
        EXPECT_EQ(out.at(x, y, z), inside ? 1 : 0);
        ones += out.at(x, y, z);
      }
  EXPECT_EQ(ones, 64u);
}

TEST(AlignMask, RejectsExtentMismatch) {
  LesionMask m(Geometry{{10, 10, 10}, {1, 1, 1}, {0, 0, 0}}, 1);
  EXPECT_THROW(align_mask(m, Geometry{{10, 10, 13}, {1, 1, 1}, {0, 0, 0}}), DataError);
  EXPECT_THROW(align_mask(m, Geometry{{10, 10, 10}, {1, 1, 1}, {3, 0, 0}}), DataError);
}

TEST(ApplyMask, IdentityZeroAndCheckerboard) {
  const Geometry g{kModelGrid, {1, 1, 1}, {0, 0, 0}};
  CtVolume v(g, 0.5f);
  EXPECT_EQ(apply_mask(v, LesionMask(g, 1)).volume.data, v.data);
  for (float x : apply_mask(v, LesionMask(g, 0)).volume.data) ASSERT_EQ(x, 0.0f);
  LesionMask checker(g, 0);
  for (std::size_t z = 0; z < g.dims[2]; ++z)
    for (std::size_t y = 0; y < g.dims[1]; ++y)
      for (std::size_t x = 0; x < g.dims[0]; ++x) checker.at(x, y, z) = (x + y + z) % 2;
  const MaskedVolume once = apply_mask(v, checker);
  for (std::size_t i = 0; i < once.volume.data.size(); ++i)
    ASSERT_EQ(once.volume.data[i], checker.data[i] ? 0.5f : 0.0f);
  EXPECT_EQ(apply_mask(once.volume, checker).volume.data, once.volume.data);
}

TEST(ApplyMask, RejectsShapeMismatchAndOffGrid) {
  const Geometry g{kModelGrid, {1, 1, 1}, {0, 0, 0}};
  CtVolume v(g, 0.5f);
  EXPECT_THROW(apply_mask(v, LesionMask(Geometry{{4, 4, 4}, {1, 1, 1}, {0, 0, 0}}, 1)), DataError);
  const Geometry small{{4, 4, 4}, {1, 1, 1}, {0, 0, 0}};
  EXPECT_THROW(apply_mask(CtVolume(small, 0.5f), LesionMask(small, 1)), DataError);
  EXPECT_NO_THROW(multiply_mask(CtVolume(small, 0.5f), LesionMask(small, 1)));
}

TEST(Rvol, ConstantFileReadsBack) {
  testing::TempDir dir;
  CtVolume v(Geometry{{4, 4, 4}, {1, 1, 1}, {0, 0, 0}}, 0.0f);
  write_volume(dir / "c.rvol", v);
  const CtVolume r = read_volume(dir / "c.rvol");
  EXPECT_EQ(r.data.size(), 64u);
  for (float x : r.data) EXPECT_EQ(x, 0.0f);
}

TEST(Rvol, RoundTripIsBitIdentical) {
  testing::TempDir dir;
  CtVolume v(Geometry{{8, 8, 8}, {0.5, 0.75, 2.5}, {-1.0, 3.25, 7.0}}, 0.0f);
  Rng rng(99);
  for (auto& x : v.data) x = static_cast<float>(rng.normal(0, 300));
  write_volume(dir / "r.rvol", v, {{"patient_id", "P1"}});
  const CtVolume r = read_volume(dir / "r.rvol");
  EXPECT_EQ(r.geom, v.geom);
  EXPECT_EQ(0, std::memcmp(r.data.data(), v.data.data(), v.data.size() * sizeof(float)));
  EXPECT_EQ(read_rvol_header(dir / "r.rvol").extra.at("patient_id"), "P1");

  LesionMask m(v.geom, 0);
  for (auto& x : m.data) x = rng.bernoulli(0.5);
  write_mask(dir / "m.rvol", m);
  EXPECT_EQ(read_mask(dir / "m.rvol").data, m.data);
}

void write_raw(const std::filesystem::path& p, const std::string& header, std::size_t payload_bytes) {
  std::ofstream out(p, std::ios::binary);
  out << "RVOL0001";
  const std::uint32_t n = static_cast<std::uint32_t>(header.size());
  const unsigned char len[4] = {static_cast<unsigned char>(n), static_cast<unsigned char>(n >> 8),
                                static_cast<unsigned char>(n >> 16), static_cast<unsigned char>(n >> 24)};
  out.write(reinterpret_cast<const char*>(len), 4);
  out << header;
  std::string payload(payload_bytes, '\0');
  out << payload;
}

TEST(Rvol, PayloadSizeMismatch) {
  testing::TempDir dir;
  write_raw(dir / "bad.rvol", "shape=2,2,2\nspacing=1,1,1\norigin=0,0,0\ndtype=f32\n", 7 * 4);
  try {
    read_volume(dir / "bad.rvol");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("payload size mismatch"), std::string::npos);
  }
}

TEST(Rvol, MalformedHeaderAndNonFinite) {
  testing::TempDir dir;
  write_raw(dir / "h.rvol", "shape=2,2\nspacing=1,1,1\norigin=0,0,0\ndtype=f32\n", 8 * 4);
  EXPECT_THROW(read_volume(dir / "h.rvol"), DataError);
  write_raw(dir / "s.rvol", "shape=2,2,2\nspacing=1,0,1\norigin=0,0,0\ndtype=f32\n", 8 * 4);
  EXPECT_THROW(read_volume(dir / "s.rvol"), DataError);
  {
    std::ofstream(dir / "magic.rvol", std::ios::binary) << "NOTRVOL!";
  }
  EXPECT_THROW(read_volume(dir / "magic.rvol"), DataError);
  CtVolume v(Geometry{{2, 1, 1}, {1, 1, 1}, {0, 0, 0}}, 0.0f);
  v.data[1] = std::nanf("");
  EXPECT_THROW(write_volume(dir / "n.rvol", v), DataError);
}

TEST(Rvol, MaskRejectsNonBinary) {
  testing::TempDir dir;
  write_raw(dir / "m.rvol", "shape=2,1,1\nspacing=1,1,1\norigin=0,0,0\ndtype=u8\n", 0);
  {
    std::ofstream out(dir / "m.rvol", std::ios::binary | std::ios::app);
    out.put(1);
    out.put(2);
  }
  EXPECT_THROW(read_mask(dir / "m.rvol"), DataError);
}

}  // namespace
}  // namespace crs

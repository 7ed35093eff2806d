#include "crs/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crs/errors.hpp"

namespace crs {

namespace {

void validate_geometry(const Geometry& g, std::size_t payload) {
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] < 1) throw DataError("volume dims must be >= 1");
    if (!(g.spacing[a] > 0.0) || !std::isfinite(g.spacing[a])) throw DataError("volume spacing must be > 0");
    if (!std::isfinite(g.origin[a])) throw DataError("volume origin must be finite");
  }
  if (payload != g.voxel_count()) throw DataError("payload size mismatch");
}

// One linear-interpolation tap pair along an axis.
struct Tap {
  std::size_t i0, i1;
  double w1;
};

std::vector<Tap> axis_taps(const Geometry& src, const Geometry& dst, int axis) {
  const std::size_t n = src.dims[axis];
  std::vector<Tap> taps(dst.dims[axis]);
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const double p = dst.origin[axis] + static_cast<double>(j) * dst.spacing[axis];
    double c = (p - src.origin[axis]) / src.spacing[axis];
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(c));
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    taps[j] = {i0, i1, c - static_cast<double>(i0)};
  }
  return taps;
}

// Separable trilinear resampling onto `dst` geometry with clamp-to-edge.
CtVolume trilinear(const CtVolume& vol, const Geometry& dst) {
  const auto& sd = vol.geom.dims;
  const auto& dd = dst.dims;
  const auto tx = axis_taps(vol.geom, dst, 0);
  const auto ty = axis_taps(vol.geom, dst, 1);
  const auto tz = axis_taps(vol.geom, dst, 2);

  // x pass: (dx, sy, sz)
  std::vector<double> a(dd[0] * sd[1] * sd[2]);
  for (std::size_t z = 0; z < sd[2]; ++z)
    for (std::size_t y = 0; y < sd[1]; ++y) {
      const float* row = &vol.data[vol.index(0, y, z)];
      double* out = &a[dd[0] * (y + sd[1] * z)];
      for (std::size_t x = 0; x < dd[0]; ++x) {
        const Tap& t = tx[x];
        out[x] = (1.0 - t.w1) * row[t.i0] + t.w1 * row[t.i1];
      }
    }
  // y pass: (dx, dy, sz)
  std::vector<double> b(dd[0] * dd[1] * sd[2]);
  for (std::size_t z = 0; z < sd[2]; ++z)
    for (std::size_t y = 0; y < dd[1]; ++y) {
      const Tap& t = ty[y];
      const double* r0 = &a[dd[0] * (t.i0 + sd[1] * z)];
      const double* r1 = &a[dd[0] * (t.i1 + sd[1] * z)];
      double* out = &b[dd[0] * (y + dd[1] * z)];
      for (std::size_t x = 0; x < dd[0]; ++x) out[x] = (1.0 - t.w1) * r0[x] + t.w1 * r1[x];
    }
  a.clear();
  a.shrink_to_fit();
  // z pass
  CtVolume result(dst);
  const std::size_t plane = dd[0] * dd[1];
  for (std::size_t z = 0; z < dd[2]; ++z) {
    const Tap& t = tz[z];
    const double* p0 = &b[plane * t.i0];
    const double* p1 = &b[plane * t.i1];
    float* out = &result.data[plane * z];
    for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<float>((1.0 - t.w1) * p0[i] + t.w1 * p1[i]);
  }
  return result;
}

// Geometry with the given dims and spacing, centred on `src`'s extent.
Geometry centred(const Geometry& src, const Dims3& dims, const Vec3& spacing) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  for (int a = 0; a < 3; ++a) {
    const double centre = src.origin[a] + 0.5 * static_cast<double>(src.dims[a] - 1) * src.spacing[a];
    g.origin[a] = centre - 0.5 * static_cast<double>(dims[a] - 1) * spacing[a];
  }
  return g;
}

}  // namespace

void validate(const CtVolume& vol) {
  validate_geometry(vol.geom, vol.data.size());
  for (float v : vol.data)
    if (!std::isfinite(v)) throw DataError("non-finite values in volume");
}

void validate(const LesionMask& mask) {
  validate_geometry(mask.geom, mask.data.size());
  for (auto v : mask.data)
    if (v > 1) throw DataError("mask values must be 0 or 1");
}

Geometry isotropic_geometry(const Geometry& geom, double target_mm) {
  if (!(target_mm > 0.0)) throw ConfigError("isotropic target spacing must be > 0");
  Dims3 dims{};
  for (int a = 0; a < 3; ++a) {
    const double n = std::round(static_cast<double>(geom.dims[a]) * geom.spacing[a] / target_mm);
    dims[a] = static_cast<std::size_t>(std::max(1.0, n));
  }
  return centred(geom, dims, {target_mm, target_mm, target_mm});
}

CtVolume resample_isotropic(const CtVolume& vol, double target_mm) {
  validate(vol);
  return trilinear(vol, isotropic_geometry(vol.geom, target_mm));
}

CtVolume resize_to_grid(const CtVolume& vol, const Dims3& grid) {
  validate(vol);
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    if (grid[a] < 1) throw ConfigError("target grid dims must be >= 1");
    spacing[a] = static_cast<double>(vol.geom.dims[a]) * vol.geom.spacing[a] / static_cast<double>(grid[a]);
  }
  return trilinear(vol, centred(vol.geom, grid, spacing));
}

CtVolume window_soft_tissue(const CtVolume& vol, double level, double width) {
  if (!(width > 0.0)) throw ConfigError("window width must be > 0");
  CtVolume out(vol.geom);
  const double low = level - 0.5 * width;
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    out.data[i] = static_cast<float>(std::clamp((vol.data[i] - low) / width, 0.0, 1.0));
  return out;
}

LesionMask align_mask(const LesionMask& mask, const Geometry& target) {
  validate(mask);
  for (int a = 0; a < 3; ++a) {
    const double tol = std::max(mask.geom.spacing[a], target.spacing[a]) + 1e-6;
    if (std::abs(mask.geom.lower(a) - target.lower(a)) > tol || std::abs(mask.geom.upper(a) - target.upper(a)) > tol)
      throw DataError("mask alignment error: physical extents differ by more than one voxel on axis " +
                      std::to_string(a));
  }
  if (mask.geom == target) return mask;

  std::array<std::vector<std::size_t>, 3> nearest;
  for (int a = 0; a < 3; ++a) {
    nearest[a].resize(target.dims[a]);
    const auto last = static_cast<double>(mask.geom.dims[a] - 1);
    for (std::size_t j = 0; j < target.dims[a]; ++j) {
      const double p = target.origin[a] + static_cast<double>(j) * target.spacing[a];
      const double c = std::clamp(std::floor((p - mask.geom.origin[a]) / mask.geom.spacing[a] + 0.5), 0.0, last);
      nearest[a][j] = static_cast<std::size_t>(c);
    }
  }
  LesionMask out(target);
  for (std::size_t z = 0; z < target.dims[2]; ++z)
    for (std::size_t y = 0; y < target.dims[1]; ++y)
      for (std::size_t x = 0; x < target.dims[0]; ++x)
        out.at(x, y, z) = mask.at(nearest[0][x], nearest[1][y], nearest[2][z]);
  return out;
}

CtVolume multiply_mask(const CtVolume& normalized, const LesionMask& mask) {
  if (normalized.geom.dims != mask.geom.dims || normalized.data.size() != mask.data.size())
    throw DataError("shape mismatch between volume and mask");
  CtVolume out(normalized.geom);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = mask.data[i] ? normalized.data[i] : 0.0f;
  return out;
}

MaskedVolume apply_mask(const CtVolume& normalized, const LesionMask& mask) {
  if (normalized.geom.dims != kModelGrid) throw DataError("masked volume must be on the 224x224x128 grid");
  for (float v : normalized.data)
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("apply_mask expects normalized intensities in [0,1]");
  return MaskedVolume{multiply_mask(normalized, mask)};
}

}  // namespace crs

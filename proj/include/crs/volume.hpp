#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace crs {

using Vec3 = std::array<double, 3>;
using Dims3 = std::array<std::size_t, 3>;

/// Voxel lattice: dims along (x, y, z), z cranio-caudal. Voxel (i, j, k) has
/// its center at origin + (i, j, k) * spacing, in millimetres.
struct Geometry {
  Dims3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  /// Physical extent along an axis (outer faces of the first and last voxel).
  double lower(int axis) const { return origin[axis] - 0.5 * spacing[axis]; }
  double upper(int axis) const {
    return origin[axis] + (static_cast<double>(dims[axis]) - 0.5) * spacing[axis];
  }
  bool operator==(const Geometry&) const = default;
};

/// Dense 3D field, x fastest.
template <typename T>
struct Volume {
  Geometry geom;
  std::vector<T> data;

  Volume() = default;
  explicit Volume(const Geometry& g, T fill = T{}) : geom(g), data(g.voxel_count(), fill) {}

  const Dims3& dims() const { return geom.dims; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + geom.dims[0] * (y + geom.dims[1] * z);
  }
  T& at(std::size_t x, std::size_t y, std::size_t z) { return data[index(x, y, z)]; }
  const T& at(std::size_t x, std::size_t y, std::size_t z) const { return data[index(x, y, z)]; }
};

/// Scalar field in Hounsfield units (or normalized intensities after windowing).
using CtVolume = Volume<float>;
/// Binary lesion mask; values are exactly 0 or 1.
using LesionMask = Volume<std::uint8_t>;

inline constexpr Dims3 kModelGrid{224, 224, 128};

/// Windowed, masked volume on the model grid; zero outside the lesion.
struct MaskedVolume {
  CtVolume volume;
};

/// Throws DataError unless dims >= 1, spacing > 0, payload size matches and
/// (for floats) every value is finite.
void validate(const CtVolume& vol);
void validate(const LesionMask& mask);

/// Trilinear resampling to isotropic spacing `target_mm`. Output dims are
/// round(dim * spacing / target) (at least 1), centred on the input extent.
CtVolume resample_isotropic(const CtVolume& vol, double target_mm = 1.0);
/// The lattice resample_isotropic produces for `geom`.
Geometry isotropic_geometry(const Geometry& geom, double target_mm = 1.0);

/// Trilinear scaling of the full extent onto `grid`; spacing becomes
/// extent / grid per axis.
CtVolume resize_to_grid(const CtVolume& vol, const Dims3& grid = kModelGrid);

/// clamp((v - (level - width/2)) / width, 0, 1). Throws ConfigError if width <= 0.
CtVolume window_soft_tissue(const CtVolume& vol, double level = 40.0, double width = 400.0);

/// Nearest-neighbour resampling of `mask` onto `target`. Throws DataError when
/// the physical extents differ by more than one voxel on any axis.
LesionMask align_mask(const LesionMask& mask, const Geometry& target);
inline LesionMask align_mask(const LesionMask& mask, const CtVolume& to) { return align_mask(mask, to.geom); }

/// out = vol * mask. Throws DataError on shape mismatch or when the result is
/// not on the model grid.
MaskedVolume apply_mask(const CtVolume& normalized, const LesionMask& mask);

/// Same product without the model-grid requirement (used for tests and small grids).
CtVolume multiply_mask(const CtVolume& normalized, const LesionMask& mask);

}  // namespace crs

#pragma once

#include <cstdint>
#include <vector>

#include "crs/volume.hpp"

namespace crs {

struct MorphologyRecord {
  double volume_cm3 = 0.0;
  double surface_cm2 = 0.0;
  double largest_cc_fraction = 0.0;
  std::size_t component_count = 0;
};

/// Lesion voxel count times voxel volume, in cm^3. Throws DataError on an empty mask.
double tumor_volume(const LesionMask& mask);

/// Sum of exposed voxel-face areas (faces against background or the volume
/// border), in cm^2. Overestimates smooth surfaces by construction.
double surface_area(const LesionMask& mask);

struct Components {
  /// Per-voxel label: 0 background, k >= 1 component k.
  std::vector<std::uint32_t> labels;
  /// sizes[k-1] = voxel count of component k; sorted descending, ties by
  /// the component's smallest linear index.
  std::vector<std::size_t> sizes;
};

/// Connectivity 6, 18 or 26 (ConfigError otherwise). Two-pass union-find.
Components connected_components(const LesionMask& mask, int connectivity = 26);

/// Size of the largest component over total lesion voxels. Throws DataError on an empty mask.
double largest_cc_fraction(const LesionMask& mask, int connectivity = 26);

MorphologyRecord measure_morphology(const LesionMask& mask, int connectivity = 26);

}  // namespace crs

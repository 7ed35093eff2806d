#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "crs/volume.hpp"

namespace crs {

// RVOL layout:
//   "RVOL0001" | u32 LE header length | UTF-8 header | raw LE payload (x fastest)
// Header lines are key=value: shape=X,Y,Z  spacing=sx,sy,sz  origin=ox,oy,oz
// dtype=f32|u8. Unknown keys are preserved in `extra`.

enum class VoxelType { kF32, kU8 };

struct RvolHeader {
  Geometry geom;
  VoxelType dtype = VoxelType::kF32;
  std::map<std::string, std::string> extra;
};

RvolHeader read_rvol_header(const std::filesystem::path& path);

CtVolume read_volume(const std::filesystem::path& path);
LesionMask read_mask(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const CtVolume& vol,
                  const std::map<std::string, std::string>& extra = {});
void write_mask(const std::filesystem::path& path, const LesionMask& mask,
                const std::map<std::string, std::string>& extra = {});

}  // namespace crs

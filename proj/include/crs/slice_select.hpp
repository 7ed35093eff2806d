#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "crs/volume.hpp"

namespace crs {

inline constexpr std::size_t kStackChannels = 3;

/// 2.5D input: three axial slices of a masked volume as channels.
/// `image` has dims (X, Y, 3); channel k is the slice at slice_indices[k].
struct SliceStack {
  CtVolume image;
  std::array<std::size_t, kStackChannels> slice_indices{};
};

/// Number of lesion voxels in each axial slice (length = dims z).
std::vector<std::size_t> lesion_density_profile(const LesionMask& mask);

/// Indices of the k largest counts; ties go to the smaller z; result ascending.
/// Throws DataError("insufficient lesion slices") when fewer than k counts are nonzero.
std::vector<std::size_t> select_top_k(std::span<const std::size_t> counts, std::size_t k = kStackChannels);

/// Copies axial slices `indices` (strictly increasing, in range) into a stack.
SliceStack stack_slices(const CtVolume& vol, std::span<const std::size_t> indices);
inline SliceStack stack_slices(const MaskedVolume& vol, std::span<const std::size_t> indices) {
  return stack_slices(vol.volume, indices);
}

/// Writes the stack as RVOL plus a "<path>.meta" sidecar holding slice_indices
/// and any extra key=value lines.
void write_stack(const std::filesystem::path& path, const SliceStack& stack,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta = {});
SliceStack read_stack(const std::filesystem::path& path);
std::filesystem::path stack_meta_path(const std::filesystem::path& stack_path);

}  // namespace crs

#include "crs/slice_select.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "crs/errors.hpp"
#include "crs/rvol.hpp"
#include "crs/strings.hpp"

namespace crs {

std::vector<std::size_t> lesion_density_profile(const LesionMask& mask) {
  const auto& d = mask.geom.dims;
  std::vector<std::size_t> counts(d[2], 0);
  const std::size_t plane = d[0] * d[1];
  for (std::size_t z = 0; z < d[2]; ++z) {
    const auto* p = &mask.data[plane * z];
    counts[z] = static_cast<std::size_t>(std::count(p, p + plane, std::uint8_t{1}));
  }
  return counts;
}

std::vector<std::size_t> select_top_k(std::span<const std::size_t> counts, std::size_t k) {
  const auto nonzero = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  if (nonzero < k || k == 0) throw DataError("insufficient lesion slices");
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return counts[a] != counts[b] ? counts[a] > counts[b] : a < b; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

SliceStack stack_slices(const CtVolume& vol, std::span<const std::size_t> indices) {
  if (indices.size() != kStackChannels) throw DataError("slice stack needs exactly 3 indices");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= vol.geom.dims[2]) throw DataError("slice index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) throw DataError("non-increasing slice indices");
  }
  SliceStack stack;
  Geometry g = vol.geom;
  g.dims[2] = kStackChannels;
  stack.image = CtVolume(g);
  const std::size_t plane = g.dims[0] * g.dims[1];
  for (std::size_t k = 0; k < kStackChannels; ++k) {
    std::copy_n(vol.data.begin() + static_cast<std::ptrdiff_t>(plane * indices[k]), plane,
                stack.image.data.begin() + static_cast<std::ptrdiff_t>(plane * k));
    stack.slice_indices[k] = indices[k];
  }
  return stack;
}

std::filesystem::path stack_meta_path(const std::filesystem::path& stack_path) {
  auto p = stack_path;
  p += ".meta";
  return p;
}

void write_stack(const std::filesystem::path& path, const SliceStack& stack,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta) {
  write_volume(path, stack.image);
  std::ofstream meta(stack_meta_path(path), std::ios::trunc);
  if (!meta) throw DataError("cannot write " + stack_meta_path(path).string());
  meta << "slice_indices=" << stack.slice_indices[0] << ',' << stack.slice_indices[1] << ','
       << stack.slice_indices[2] << '\n';
  for (const auto& [k, v] : extra_meta) meta << k << '=' << v << '\n';
}

SliceStack read_stack(const std::filesystem::path& path) {
  SliceStack stack;
  stack.image = read_volume(path);
  if (stack.image.geom.dims[2] != kStackChannels) throw DataError("slice stack must have 3 channels: " + path.string());
  std::ifstream meta(stack_meta_path(path));
  if (!meta) throw DataError("missing slice stack metadata for " + path.string());
  std::string line;
  bool found = false;
  while (std::getline(meta, line)) {
    if (line.rfind("slice_indices=", 0) != 0) continue;
    const auto parts = split(line.substr(14), ',');
    if (parts.size() != kStackChannels) throw DataError("malformed slice_indices in " + path.string());
    for (std::size_t k = 0; k < kStackChannels; ++k)
      stack.slice_indices[k] = static_cast<std::size_t>(parse_int(parts[k], "slice_indices"));
    found = true;
  }
  if (!found) throw DataError("slice_indices missing from " + stack_meta_path(path).string());
  return stack;
}

}  // namespace crs

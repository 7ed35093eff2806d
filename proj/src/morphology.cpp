#include "crs/morphology.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "crs/errors.hpp"

namespace crs {

namespace {

std::size_t lesion_count(const LesionMask& mask) {
  return static_cast<std::size_t>(std::count(mask.data.begin(), mask.data.end(), std::uint8_t{1}));
}

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::uint32_t> parent_;
};

struct Offset {
  int dx, dy, dz;
};

// Neighbours that precede the current voxel in raster order.
std::vector<Offset> backward_neighbours(int connectivity) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 0; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (connectivity == 6 && manhattan > 1) continue;
        if (connectivity == 18 && manhattan > 2) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

}  // namespace

double tumor_volume(const LesionMask& mask) {
  validate(mask);
  const std::size_t n = lesion_count(mask);
  if (n == 0) throw DataError("tumor volume of an empty mask");
  const auto& s = mask.geom.spacing;
  return static_cast<double>(n) * s[0] * s[1] * s[2] / 1000.0;
}

double surface_area(const LesionMask& mask) {
  validate(mask);
  if (lesion_count(mask) == 0) throw DataError("surface area of an empty mask");
  const auto& d = mask.geom.dims;
  const auto& s = mask.geom.spacing;
  const std::array<double, 3> face_area{s[1] * s[2], s[0] * s[2], s[0] * s[1]};
  std::array<std::size_t, 3> exposed{0, 0, 0};
  auto filled = [&](long x, long y, long z) {
    if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(d[0]) || y >= static_cast<long>(d[1]) ||
        z >= static_cast<long>(d[2]))
      return false;
    return mask.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) == 1;
  };
  for (long z = 0; z < static_cast<long>(d[2]); ++z)
    for (long y = 0; y < static_cast<long>(d[1]); ++y)
      for (long x = 0; x < static_cast<long>(d[0]); ++x) {
        if (!filled(x, y, z)) continue;
        exposed[0] += !filled(x - 1, y, z) + !filled(x + 1, y, z);
        exposed[1] += !filled(x, y - 1, z) + !filled(x, y + 1, z);
        exposed[2] += !filled(x, y, z - 1) + !filled(x, y, z + 1);
      }
  double mm2 = 0.0;
  for (int a = 0; a < 3; ++a) mm2 += static_cast<double>(exposed[a]) * face_area[a];
  return mm2 / 100.0;
}

Components connected_components(const LesionMask& mask, int connectivity) {
  if (connectivity != 6 && connectivity != 18 && connectivity != 26)
    throw ConfigError("connectivity must be 6, 18 or 26");
  validate(mask);
  const auto& d = mask.geom.dims;
  const auto neighbours = backward_neighbours(connectivity);

  Components out;
  out.labels.assign(mask.data.size(), 0);
  DisjointSet sets;
  sets.make();  // provisional label 0 is background
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        const std::size_t idx = mask.index(x, y, z);
        if (mask.data[idx] == 0) continue;
        std::uint32_t label = 0;
        for (const Offset& o : neighbours) {
          const long nx = static_cast<long>(x) + o.dx, ny = static_cast<long>(y) + o.dy,
                     nz = static_cast<long>(z) + o.dz;
          if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(d[0]) || ny >= static_cast<long>(d[1])) continue;
          const std::uint32_t other =
              out.labels[mask.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), static_cast<std::size_t>(nz))];
          if (other == 0) continue;
          if (label == 0) label = other;
          else sets.unite(label, other);
        }
        out.labels[idx] = label == 0 ? sets.make() : label;
      }

  // Resolve roots and collect size + first voxel for each component.
  struct Info {
    std::size_t size = 0;
    std::size_t first = 0;
  };
  std::vector<std::uint32_t> root_of(1, 0);
  std::vector<Info> info;
  std::vector<std::int64_t> compact;
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (out.labels[i] == 0) continue;
    const std::uint32_t r = sets.find(out.labels[i]);
    if (compact.size() <= r) compact.resize(r + 1, -1);
    if (compact[r] < 0) {
      compact[r] = static_cast<std::int64_t>(info.size());
      info.push_back({0, i});
    }
    info[static_cast<std::size_t>(compact[r])].size++;
    out.labels[i] = static_cast<std::uint32_t>(compact[r]);
  }
  std::vector<std::size_t> order(info.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return info[a].size != info[b].size ? info[a].size > info[b].size : info[a].first < info[b].first;
  });
  std::vector<std::uint32_t> final_label(info.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    final_label[order[k]] = static_cast<std::uint32_t>(k + 1);
    out.sizes.push_back(info[order[k]].size);
  }
  for (std::size_t i = 0; i < out.labels.size(); ++i)
    if (mask.data[i]) out.labels[i] = final_label[out.labels[i]];
  return out;
}

double largest_cc_fraction(const LesionMask& mask, int connectivity) {
  const Components cc = connected_components(mask, connectivity);
  if (cc.sizes.empty()) throw DataError("largest component fraction of an empty mask");
  const std::size_t total = std::accumulate(cc.sizes.begin(), cc.sizes.end(), std::size_t{0});
  return static_cast<double>(cc.sizes.front()) / static_cast<double>(total);
}

MorphologyRecord measure_morphology(const LesionMask& mask, int connectivity) {
  MorphologyRecord r;
  r.volume_cm3 = tumor_volume(mask);
  r.surface_cm2 = surface_area(mask);
  const Components cc = connected_components(mask, connectivity);
  r.component_count = cc.sizes.size();
  const std::size_t total = std::accumulate(cc.sizes.begin(), cc.sizes.end(), std::size_t{0});
  r.largest_cc_fraction = static_cast<double>(cc.sizes.front()) / static_cast<double>(total);
  return r;
}

}  // namespace crs

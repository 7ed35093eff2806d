#include "crs/rvol.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "crs/errors.hpp"
#include "crs/strings.hpp"

namespace crs {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'O', 'L', '0', '0', '0', '1'};

std::uint32_t load_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void store_u32_le(std::uint32_t v, std::ostream& out) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

Vec3 parse_vec3(const std::string& key, const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw DataError("malformed header: " + key + " needs 3 components");
  Vec3 v{};
  for (int i = 0; i < 3; ++i) v[i] = parse_double(parts[i], key);
  return v;
}

struct RawFile {
  RvolHeader header;
  std::vector<unsigned char> payload;
};

RawFile read_raw(const std::filesystem::path& path, bool want_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  unsigned char len_bytes[4];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("malformed header: bad magic in " + path.string());
  if (!in.read(reinterpret_cast<char*>(len_bytes), 4)) throw DataError("malformed header: truncated");
  const std::uint32_t header_len = load_u32_le(len_bytes);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw DataError("malformed header: truncated");

  RawFile raw;
  bool have_shape = false, have_spacing = false, have_dtype = false;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed header line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "shape") {
      const auto parts = split(value, ',');
      if (parts.size() != 3) throw DataError("malformed header: shape needs 3 components");
      for (int i = 0; i < 3; ++i) {
        const long long d = parse_int(parts[i], "shape");
        if (d < 1) throw DataError("malformed header: shape components must be >= 1");
        raw.header.geom.dims[i] = static_cast<std::size_t>(d);
      }
      have_shape = true;
    } else if (key == "spacing") {
      raw.header.geom.spacing = parse_vec3(key, value);
      for (double s : raw.header.geom.spacing)
        if (!(s > 0.0) || !std::isfinite(s)) throw DataError("malformed header: spacing must be > 0");
      have_spacing = true;
    } else if (key == "origin") {
      raw.header.geom.origin = parse_vec3(key, value);
    } else if (key == "dtype") {
      if (value == "f32") raw.header.dtype = VoxelType::kF32;
      else if (value == "u8") raw.header.dtype = VoxelType::kU8;
      else throw DataError("malformed header: unsupported dtype " + value);
      have_dtype = true;
    } else {
      raw.header.extra[key] = value;
    }
  }
  if (!have_shape || !have_spacing || !have_dtype)
    throw DataError("malformed header: shape, spacing and dtype are required");
  if (!want_payload) return raw;

  const std::size_t elem = raw.header.dtype == VoxelType::kF32 ? 4 : 1;
  const std::size_t expected = raw.header.geom.voxel_count() * elem;
  std::vector<unsigned char> payload(std::istreambuf_iterator<char>(in), {});
  if (payload.size() != expected)
    throw DataError("payload size mismatch in " + path.string() + ": expected " + std::to_string(expected) +
                    " bytes, found " + std::to_string(payload.size()));
  raw.payload = std::move(payload);
  return raw;
}

std::string header_text(const Geometry& g, const char* dtype, const std::map<std::string, std::string>& extra) {
  std::ostringstream h;
  h << "shape=" << g.dims[0] << ',' << g.dims[1] << ',' << g.dims[2] << '\n';
  h << "spacing=" << format_double(g.spacing[0]) << ',' << format_double(g.spacing[1]) << ','
    << format_double(g.spacing[2]) << '\n';
  h << "origin=" << format_double(g.origin[0]) << ',' << format_double(g.origin[1]) << ','
    << format_double(g.origin[2]) << '\n';
  h << "dtype=" << dtype << '\n';
  for (const auto& [k, v] : extra) h << k << '=' << v << '\n';
  return h.str();
}

void write_raw(const std::filesystem::path& path, const std::string& header, const void* data, std::size_t bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 8);
  store_u32_le(static_cast<std::uint32_t>(header.size()), out);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

RvolHeader read_rvol_header(const std::filesystem::path& path) { return read_raw(path, false).header; }

CtVolume read_volume(const std::filesystem::path& path) {
  RawFile raw = read_raw(path, true);
  CtVolume vol;
  vol.geom = raw.header.geom;
  vol.data.resize(vol.geom.voxel_count());
  if (raw.header.dtype == VoxelType::kU8) {
    for (std::size_t i = 0; i < vol.data.size(); ++i) vol.data[i] = raw.payload[i];
  } else {
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
      const std::uint32_t bits = load_u32_le(&raw.payload[4 * i]);
      vol.data[i] = std::bit_cast<float>(bits);
      if (!std::isfinite(vol.data[i])) throw DataError("non-finite values in " + path.string());
    }
  }
  return vol;
}

LesionMask read_mask(const std::filesystem::path& path) {
  RawFile raw = read_raw(path, true);
  if (raw.header.dtype != VoxelType::kU8) throw DataError("mask must use dtype u8: " + path.string());
  LesionMask mask;
  mask.geom = raw.header.geom;
  mask.data.assign(raw.payload.begin(), raw.payload.end());
  for (auto v : mask.data)
    if (v > 1) throw DataError("mask values must be 0 or 1: " + path.string());
  return mask;
}

void write_volume(const std::filesystem::path& path, const CtVolume& vol,
                  const std::map<std::string, std::string>& extra) {
  validate(vol);
  std::vector<unsigned char> payload(vol.data.size() * 4);
  for (std::size_t i = 0; i < vol.data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(vol.data[i]);
    for (int b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  write_raw(path, header_text(vol.geom, "f32", extra), payload.data(), payload.size());
}

void write_mask(const std::filesystem::path& path, const LesionMask& mask,
                const std::map<std::string, std::string>& extra) {
  validate(mask);
  write_raw(path, header_text(mask.geom, "u8", extra), mask.data.data(), mask.data.size());
}

}  // namespace crs

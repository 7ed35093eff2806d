#include "crs/checksum.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "crs/errors.hpp"

namespace crs {

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    h_ ^= static_cast<std::uint64_t>(b);
    h_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view text) { update(std::as_bytes(std::span(text.data(), text.size()))); }

std::uint64_t fnv1a(std::span<const std::byte> bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.digest();
}

std::uint64_t fnv1a(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.digest();
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Fnv1a h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::as_bytes(std::span(buf.data(), got)));
  }
  return h.digest();
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace crs

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace crs {

/// Incremental 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::span<const std::byte> bytes);
std::uint64_t fnv1a(std::string_view text);
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace crs

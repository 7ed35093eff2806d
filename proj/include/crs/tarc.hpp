#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace crs {

// TARC layout (all integers u32 little-endian):
//   "TARC0001" | count | per tensor, in name order:
//     name length | UTF-8 name | rank | dims[rank] | dtype length | "f32" | payload (f32 LE, row-major)

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t numel() const;
};

class TensorArchive {
 public:
  void put(const std::string& name, std::vector<std::uint32_t> dims, std::vector<float> data);
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
  /// Throws DataError naming the tensor if it is missing or has other dims.
  const Tensor& get(const std::string& name, const std::vector<std::uint32_t>& expected_dims) const;
  const Tensor& get(const std::string& name) const;
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  std::vector<unsigned char> serialize() const;
  static TensorArchive deserialize(const std::vector<unsigned char>& bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

  /// FNV-1a of the serialized bytes; equals file_checksum() of a saved archive.
  std::uint64_t checksum() const;

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace crs

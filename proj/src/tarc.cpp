#include "crs/tarc.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

#include "crs/checksum.hpp"
#include "crs/errors.hpp"

namespace crs {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'R', 'C', '0', '0', '0', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_str(std::vector<unsigned char>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = std::uint32_t{b_[p_]} | (std::uint32_t{b_[p_ + 1]} << 8) |
                            (std::uint32_t{b_[p_ + 2]} << 16) | (std::uint32_t{b_[p_ + 3]} << 24);
    p_ += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(&b_[p_]), n);
    p_ += n;
    return s;
  }
  bool done() const { return p_ == b_.size(); }
  void need(std::size_t n) const {
    if (b_.size() - p_ < n) throw DataError("truncated tensor archive");
  }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t p_ = 0;
};

}  // namespace

std::size_t Tensor::numel() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void TensorArchive::put(const std::string& name, std::vector<std::uint32_t> dims, std::vector<float> data) {
  Tensor t{std::move(dims), std::move(data)};
  if (t.numel() != t.data.size()) throw DataError("tensor " + name + ": dims do not match data size");
  tensors_[name] = std::move(t);
}

const Tensor& TensorArchive::get(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw DataError("missing tensor: " + name);
  return it->second;
}

const Tensor& TensorArchive::get(const std::string& name, const std::vector<std::uint32_t>& expected_dims) const {
  const Tensor& t = get(name);
  if (t.dims != expected_dims) throw DataError("shape mismatch for tensor: " + name);
  return t;
}

std::vector<unsigned char> TensorArchive::serialize() const {
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put_u32(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [name, t] : tensors_) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    put_str(out, "f32");
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

TensorArchive TensorArchive::deserialize(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw DataError("not a tensor archive");
  const std::vector<unsigned char> body(bytes.begin() + 8, bytes.end());
  Reader r(body);
  TensorArchive ar;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    t.dims.resize(rank);
    for (auto& d : t.dims) d = r.u32();
    const std::string dtype = r.str();
    if (dtype != "f32") throw DataError("tensor " + name + ": unsupported dtype " + dtype);
    const std::size_t n = t.numel();
    r.need(4 * n);
    t.data.resize(n);
    for (auto& v : t.data) v = std::bit_cast<float>(r.u32());
    ar.tensors_[name] = std::move(t);
  }
  if (!r.done()) throw DataError("trailing bytes in tensor archive");
  return ar;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<unsigned char> bytes(std::istreambuf_iterator<char>(in), {});
  return deserialize(bytes);
}

std::uint64_t TensorArchive::checksum() const {
  const auto bytes = serialize();
  return fnv1a(std::as_bytes(std::span(bytes.data(), bytes.size())));
}

}  // namespace crs

#include "crs/encoder.hpp"

#include <cmath>
#include <string>

#include "crs/errors.hpp"
#include "crs/rng.hpp"

namespace crs {

namespace {

using Dims = std::vector<std::uint32_t>;

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

RowMatrix load_matrix(const TensorArchive& ar, const std::string& name, const Dims& dims, std::size_t rows,
                      std::size_t cols) {
  const Tensor& t = ar.get(name, dims);
  for (float v : t.data)
    if (!std::isfinite(v)) throw DataError("non-finite parameter in " + name);
  RowMatrix m(rows, cols);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

RowVector load_vector(const TensorArchive& ar, const std::string& name, const Dims& dims, std::size_t n) {
  RowMatrix m = load_matrix(ar, name, dims, 1, n);
  return m.row(0);
}

void store(TensorArchive& ar, const std::string& name, const Dims& dims, const float* data, std::size_t n) {
  ar.put(name, dims, std::vector<float>(data, data + n));
}

std::string block_name(std::size_t i, const char* suffix) { return "blocks." + std::to_string(i) + "." + suffix; }

void layer_norm_rows(const TokenMatrix& x, const LayerNormParams& ln, float eps, TokenMatrix& out) {
  out.resize(x.rows(), x.cols());
  const auto d = static_cast<float>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const float mean = row.sum() / d;
    const float var = (row.array() - mean).square().sum() / d;
    const float inv = 1.0f / std::sqrt(var + eps);
    out.row(r) = ((row.array() - mean) * inv * ln.weight.array() + ln.bias.array()).matrix();
  }
}

float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

RowMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double sd) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v = rng.normal();
    while (std::abs(v) > 2.0) v = rng.normal();  // truncated at 2 sd
    m.data()[i] = static_cast<float>(sd * v);
  }
  return m;
}

}  // namespace

EncoderParams EncoderParams::from_archive(const TensorArchive& ar, const EncoderConfig& cfg) {
  if (cfg.image_size % cfg.patch_size != 0 || cfg.embed_dim % cfg.heads != 0)
    throw ConfigError("inconsistent encoder configuration");
  const std::size_t D = cfg.embed_dim, M = cfg.mlp_dim, P = cfg.patch_size, C = cfg.channels;
  EncoderParams p;
  p.config = cfg;
  p.patch_weight = load_matrix(ar, "patch_embed.proj.weight", {u32(D), u32(C), u32(P), u32(P)}, D, cfg.patch_dim());
  p.patch_bias = load_vector(ar, "patch_embed.proj.bias", {u32(D)}, D);
  p.cls_token = load_vector(ar, "cls_token", {1, 1, u32(D)}, D);
  p.pos_embed = load_matrix(ar, "pos_embed", {1, u32(1 + cfg.num_patches()), u32(D)}, 1 + cfg.num_patches(), D);
  if (cfg.register_tokens > 0)
    p.register_tokens =
        load_matrix(ar, "register_tokens", {1, u32(cfg.register_tokens), u32(D)}, cfg.register_tokens, D);
  else
    p.register_tokens.resize(0, D);
  p.layers.resize(cfg.depth);
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    EncoderLayer& l = p.layers[i];
    l.norm1 = {load_vector(ar, block_name(i, "norm1.weight"), {u32(D)}, D),
               load_vector(ar, block_name(i, "norm1.bias"), {u32(D)}, D)};
    l.qkv_weight = load_matrix(ar, block_name(i, "attn.qkv.weight"), {u32(3 * D), u32(D)}, 3 * D, D);
    l.qkv_bias = load_vector(ar, block_name(i, "attn.qkv.bias"), {u32(3 * D)}, 3 * D);
    l.proj_weight = load_matrix(ar, block_name(i, "attn.proj.weight"), {u32(D), u32(D)}, D, D);
    l.proj_bias = load_vector(ar, block_name(i, "attn.proj.bias"), {u32(D)}, D);
    l.norm2 = {load_vector(ar, block_name(i, "norm2.weight"), {u32(D)}, D),
               load_vector(ar, block_name(i, "norm2.bias"), {u32(D)}, D)};
    l.fc1_weight = load_matrix(ar, block_name(i, "mlp.fc1.weight"), {u32(M), u32(D)}, M, D);
    l.fc1_bias = load_vector(ar, block_name(i, "mlp.fc1.bias"), {u32(M)}, M);
    l.fc2_weight = load_matrix(ar, block_name(i, "mlp.fc2.weight"), {u32(D), u32(M)}, D, M);
    l.fc2_bias = load_vector(ar, block_name(i, "mlp.fc2.bias"), {u32(D)}, D);
  }
  p.norm = {load_vector(ar, "norm.weight", {u32(D)}, D), load_vector(ar, "norm.bias", {u32(D)}, D)};
  return p;
}

TensorArchive EncoderParams::to_archive() const {
  const auto& cfg = config;
  const std::size_t D = cfg.embed_dim, M = cfg.mlp_dim, P = cfg.patch_size, C = cfg.channels;
  TensorArchive ar;
  store(ar, "patch_embed.proj.weight", {u32(D), u32(C), u32(P), u32(P)}, patch_weight.data(), patch_weight.size());
  store(ar, "patch_embed.proj.bias", {u32(D)}, patch_bias.data(), D);
  store(ar, "cls_token", {1, 1, u32(D)}, cls_token.data(), D);
  store(ar, "pos_embed", {1, u32(pos_embed.rows()), u32(D)}, pos_embed.data(), pos_embed.size());
  if (cfg.register_tokens > 0)
    store(ar, "register_tokens", {1, u32(cfg.register_tokens), u32(D)}, register_tokens.data(),
          register_tokens.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const EncoderLayer& l = layers[i];
    store(ar, block_name(i, "norm1.weight"), {u32(D)}, l.norm1.weight.data(), D);
    store(ar, block_name(i, "norm1.bias"), {u32(D)}, l.norm1.bias.data(), D);
    store(ar, block_name(i, "attn.qkv.weight"), {u32(3 * D), u32(D)}, l.qkv_weight.data(), l.qkv_weight.size());
    store(ar, block_name(i, "attn.qkv.bias"), {u32(3 * D)}, l.qkv_bias.data(), 3 * D);
    store(ar, block_name(i, "attn.proj.weight"), {u32(D), u32(D)}, l.proj_weight.data(), l.proj_weight.size());
    store(ar, block_name(i, "attn.proj.bias"), {u32(D)}, l.proj_bias.data(), D);
    store(ar, block_name(i, "norm2.weight"), {u32(D)}, l.norm2.weight.data(), D);
    store(ar, block_name(i, "norm2.bias"), {u32(D)}, l.norm2.bias.data(), D);
    store(ar, block_name(i, "mlp.fc1.weight"), {u32(M), u32(D)}, l.fc1_weight.data(), l.fc1_weight.size());
    store(ar, block_name(i, "mlp.fc1.bias"), {u32(M)}, l.fc1_bias.data(), M);
    store(ar, block_name(i, "mlp.fc2.weight"), {u32(D), u32(M)}, l.fc2_weight.data(), l.fc2_weight.size());
    store(ar, block_name(i, "mlp.fc2.bias"), {u32(D)}, l.fc2_bias.data(), D);
  }
  store(ar, "norm.weight", {u32(D)}, norm.weight.data(), D);
  store(ar, "norm.bias", {u32(D)}, norm.bias.data(), D);
  return ar;
}

EncoderParams EncoderParams::random(std::uint64_t seed, const EncoderConfig& cfg) {
  Rng rng = Rng::derive(seed, stream::kEncoderInit, 0);
  const std::size_t D = cfg.embed_dim, M = cfg.mlp_dim;
  constexpr double sd = 0.02;
  const auto fan_in = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  EncoderParams p;
  p.config = cfg;
  p.patch_weight = random_matrix(rng, D, cfg.patch_dim(), fan_in(cfg.patch_dim()));
  p.patch_bias = RowVector::Zero(D);
  p.cls_token = random_matrix(rng, 1, D, sd);
  p.pos_embed = random_matrix(rng, 1 + cfg.num_patches(), D, sd);
  p.register_tokens = random_matrix(rng, cfg.register_tokens, D, sd);
  p.layers.resize(cfg.depth);
  for (auto& l : p.layers) {
    l.norm1 = {RowVector::Ones(D), RowVector::Zero(D)};
    l.qkv_weight = random_matrix(rng, 3 * D, D, fan_in(D));
    l.qkv_bias = RowVector::Zero(3 * D);
    l.proj_weight = random_matrix(rng, D, D, fan_in(D));
    l.proj_bias = RowVector::Zero(D);
    l.norm2 = {RowVector::Ones(D), RowVector::Zero(D)};
    l.fc1_weight = random_matrix(rng, M, D, fan_in(D));
    l.fc1_bias = RowVector::Zero(M);
    l.fc2_weight = random_matrix(rng, D, M, fan_in(M));
    l.fc2_bias = RowVector::Zero(D);
  }
  p.norm = {RowVector::Ones(D), RowVector::Zero(D)};
  return p;
}

EncoderParams load_encoder_params(const std::filesystem::path& path, const EncoderConfig& config) {
  return EncoderParams::from_archive(TensorArchive::load(path), config);
}

TokenMatrix patch_embed(const SliceStack& stack, const EncoderParams& params) {
  const EncoderConfig& cfg = params.config;
  const auto& dims = stack.image.geom.dims;
  if (dims[0] != cfg.image_size || dims[1] != cfg.image_size || dims[2] != cfg.channels)
    throw DataError("encoder input must be 224x224x3");

  const std::size_t side = cfg.patches_per_side(), P = cfg.patch_size;
  RowMatrix patches(cfg.num_patches(), cfg.patch_dim());
  for (std::size_t py = 0; py < side; ++py)
    for (std::size_t px = 0; px < side; ++px) {
      float* out = patches.row(static_cast<Eigen::Index>(py * side + px)).data();
      for (std::size_t c = 0; c < cfg.channels; ++c)
        for (std::size_t ky = 0; ky < P; ++ky)
          for (std::size_t kx = 0; kx < P; ++kx) {
            const float v = stack.image.at(px * P + kx, py * P + ky, c);
            *out++ = (v - cfg.input_mean) / cfg.input_std;
          }
    }

  const auto R = static_cast<Eigen::Index>(cfg.register_tokens);
  const auto N = static_cast<Eigen::Index>(cfg.num_patches());
  TokenMatrix tokens(1 + R + N, static_cast<Eigen::Index>(cfg.embed_dim));
  tokens.row(0) = params.cls_token + params.pos_embed.row(0);
  if (R > 0) tokens.middleRows(1, R) = params.register_tokens;
  auto body = tokens.bottomRows(N);
  body.noalias() = patches * params.patch_weight.transpose();
  body.rowwise() += params.patch_bias;
  body += params.pos_embed.bottomRows(N);
  return tokens;
}

TokenMatrix transformer_block(const TokenMatrix& tokens, const EncoderLayer& layer, const EncoderConfig& cfg) {
  const auto T = tokens.rows();
  const auto D = static_cast<Eigen::Index>(cfg.embed_dim);
  const auto hd = static_cast<Eigen::Index>(cfg.head_dim());
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

  TokenMatrix x = tokens;
  TokenMatrix normed;
  layer_norm_rows(x, layer.norm1, cfg.layer_norm_eps, normed);

  RowMatrix qkv(T, 3 * D);
  qkv.noalias() = normed * layer.qkv_weight.transpose();
  qkv.rowwise() += layer.qkv_bias;

  RowMatrix attended(T, D);
  RowMatrix scores(T, T);
  for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(cfg.heads); ++h) {
    const auto q = qkv.middleCols(h * hd, hd);
    const auto k = qkv.middleCols(D + h * hd, hd);
    const auto v = qkv.middleCols(2 * D + h * hd, hd);
    scores.noalias() = (q * k.transpose()) * scale;
    for (Eigen::Index r = 0; r < T; ++r) {
      auto row = scores.row(r);
      row = (row.array() - row.maxCoeff()).exp().matrix();
      row /= row.sum();
    }
    attended.middleCols(h * hd, hd).noalias() = scores * v;
  }
  x.noalias() += attended * layer.proj_weight.transpose();
  x.rowwise() += layer.proj_bias;

  layer_norm_rows(x, layer.norm2, cfg.layer_norm_eps, normed);
  RowMatrix hidden(T, static_cast<Eigen::Index>(cfg.mlp_dim));
  hidden.noalias() = normed * layer.fc1_weight.transpose();
  hidden.rowwise() += layer.fc1_bias;
  hidden = hidden.unaryExpr([](float v) { return gelu(v); });
  x.noalias() += hidden * layer.fc2_weight.transpose();
  x.rowwise() += layer.fc2_bias;
  return x;
}

Embedding encode(const SliceStack& stack, const EncoderParams& params) {
  TokenMatrix x = patch_embed(stack, params);
  for (const auto& layer : params.layers) x = transformer_block(x, layer, params.config);
  TokenMatrix cls = x.topRows(1);
  TokenMatrix out;
  layer_norm_rows(cls, params.norm, params.config.layer_norm_eps, out);
  Embedding e{};
  for (std::size_t i = 0; i < kEmbedDim; ++i) {
    e[i] = out(0, static_cast<Eigen::Index>(i));
    if (!std::isfinite(e[i])) throw DataError("non-finite encoder output");
  }
  return e;
}

}  // namespace crs

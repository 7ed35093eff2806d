#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "crs/slice_select.hpp"
#include "crs/tarc.hpp"

namespace crs {

inline constexpr std::size_t kEmbedDim = 384;

/// ViT-S/16 hyper-parameters. Only the register count and the input
/// standardization are meant to be changed.
struct EncoderConfig {
  std::size_t image_size = 224;
  std::size_t patch_size = 16;
  std::size_t channels = 3;
  std::size_t embed_dim = kEmbedDim;
  std::size_t depth = 12;
  std::size_t heads = 6;
  std::size_t mlp_dim = 1536;
  std::size_t register_tokens = 0;
  float layer_norm_eps = 1e-6f;
  float input_mean = 0.5f;
  float input_std = 0.25f;

  std::size_t patches_per_side() const { return image_size / patch_size; }
  std::size_t num_patches() const { return patches_per_side() * patches_per_side(); }
  std::size_t patch_dim() const { return channels * patch_size * patch_size; }
  std::size_t head_dim() const { return embed_dim / heads; }
  std::size_t num_tokens() const { return 1 + register_tokens + num_patches(); }
};

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;

struct LayerNormParams {
  RowVector weight, bias;
};

struct EncoderLayer {
  LayerNormParams norm1;
  RowMatrix qkv_weight;  // (3D, D): rows are q, then k, then v
  RowVector qkv_bias;
  RowMatrix proj_weight;  // (D, D)
  RowVector proj_bias;
  LayerNormParams norm2;
  RowMatrix fc1_weight;  // (M, D)
  RowVector fc1_bias;
  RowMatrix fc2_weight;  // (D, M)
  RowVector fc2_bias;
};

/// Frozen encoder weights. Tensor names follow the common ViT checkpoint
/// layout (patch_embed.proj.weight, blocks.N.attn.qkv.weight, ...).
struct EncoderParams {
  EncoderConfig config;
  RowMatrix patch_weight;  // (D, C*P*P), inner order (channel, row, column)
  RowVector patch_bias;
  RowVector cls_token;
  RowMatrix pos_embed;        // (1 + num_patches, D)
  RowMatrix register_tokens;  // (R, D)
  std::vector<EncoderLayer> layers;
  LayerNormParams norm;

  static EncoderParams from_archive(const TensorArchive& archive, const EncoderConfig& config = {});
  TensorArchive to_archive() const;
  std::uint64_t checksum() const { return to_archive().checksum(); }

  /// Seeded random weights. Linear layers draw from normal(0, 1/sqrt(fan_in)) so
  /// activations keep their scale through depth; tokens and positions use sd 0.02.
  static EncoderParams random(std::uint64_t seed, const EncoderConfig& config = {});
};

EncoderParams load_encoder_params(const std::filesystem::path& path, const EncoderConfig& config = {});

using TokenMatrix = RowMatrix;  // (tokens, D)
using Embedding = std::array<float, kEmbedDim>;

/// Standardizes the stack, splits it into row-major 16x16 patches, projects
/// them, prepends CLS (and register tokens) and adds positional embeddings.
TokenMatrix patch_embed(const SliceStack& stack, const EncoderParams& params);

/// Pre-norm block: x += Attn(LN(x)); x += MLP(LN(x)).
TokenMatrix transformer_block(const TokenMatrix& tokens, const EncoderLayer& layer, const EncoderConfig& config);

/// Full forward pass; returns the final-normed CLS token.
Embedding encode(const SliceStack& stack, const EncoderParams& params);

}  // namespace crs

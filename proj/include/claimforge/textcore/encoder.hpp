#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/rng.hpp"
#include "claimforge/numerics/tensor.hpp"
#include "claimforge/textcore/vocabulary.hpp"

namespace claimforge::textcore {

using numerics::Tensor;

struct EncoderConfig {
  std::size_t model_dim = 512;
  std::size_t num_heads = 8;
  std::size_t head_dim = 64;
  std::size_t num_layers = 2;
  std::size_t max_seq_len = 1024;
  std::size_t ffn_dim = 0;  // 0 means 4 * model_dim

  std::size_t ffn_width() const { return ffn_dim ? ffn_dim : 4 * model_dim; }
  // Throws TextError unless num_heads * head_dim == model_dim and all sizes > 0.
  void validate() const;
};

// Pre-norm transformer block. Projection weights are (out × in).
struct TransformerLayer {
  Tensor ln1_gain, ln1_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gain, ln2_bias;
  Tensor w1, b1, w2, b2;

  static TransformerLayer init(std::size_t model_dim, std::size_t ffn_dim, std::size_t num_layers,
                               numerics::Rng& rng);
  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck, const std::string& prefix) const;
  static TransformerLayer import_from(const numerics::Checkpoint& ck, const std::string& prefix);
};

// Replacement Q/V projection weights (e.g. with low-rank deltas folded in).
// Undefined members fall back to the layer's own weights.
struct ProjectionOverride {
  Tensor wq;
  Tensor wv;
};

Tensor transformer_layer(const Tensor& x, const TransformerLayer& layer, std::size_t num_heads, bool causal,
                         const ProjectionOverride* override = nullptr);

Tensor sinusoidal_positions(std::size_t length, std::size_t dim, std::size_t start = 0);

struct EncoderParams {
  EncoderConfig config;
  Tensor token_embedding;  // vocab × model_dim
  std::vector<TransformerLayer> layers;

  static EncoderParams init(const EncoderConfig& config, std::size_t vocab_size, numerics::Rng& rng);
  std::size_t vocab_size() const { return token_embedding.rows(); }
  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck, const std::string& prefix) const;
  static EncoderParams import_from(const numerics::Checkpoint& ck, const std::string& prefix,
                                   const EncoderConfig& config);
};

// Token embeddings plus sinusoidal positions, before any transformer layer.
Tensor embed_tokens(std::span<const std::size_t> ids, const Tensor& token_embedding, std::size_t max_seq_len);

/// Bidirectional encoder: (len × model_dim) hidden states.
Tensor encode_sequence(std::span<const std::size_t> ids, const EncoderParams& params);

}  // namespace claimforge::textcore

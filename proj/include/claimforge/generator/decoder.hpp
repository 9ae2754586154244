#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "claimforge/generator/adapter_bank.hpp"
#include "claimforge/generator/domain_classifier.hpp"
#include "claimforge/textcore/encoder.hpp"

namespace claimforge::generator {

using textcore::TokenIds;

/// Causal language model: token embedding with sinusoidal positions, pre-norm
/// causal transformer layers, final layer norm and an output projection.
struct DecoderParams {
  textcore::EncoderConfig config;
  Tensor token_embedding;  // vocab × model_dim
  std::vector<textcore::TransformerLayer> layers;
  Tensor final_gain, final_bias;
  Tensor lm_head;  // vocab × model_dim

  static DecoderParams init(const textcore::EncoderConfig& config, std::size_t vocab_size, numerics::Rng& rng);
  std::size_t vocab_size() const { return token_embedding.rows(); }
  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck, const std::string& prefix) const;
  static DecoderParams import_from(const numerics::Checkpoint& ck, const std::string& prefix,
                                   const textcore::EncoderConfig& config);
};

struct GeneratorModel {
  DecoderParams decoder;
  AdapterBank bank;
  DomainClassifier classifier;
  std::size_t max_prefix_tokens = 256;

  static GeneratorModel init(const textcore::EncoderConfig& config, std::size_t vocab_size, numerics::Rng& rng,
                             std::size_t max_prefix_tokens = 256);
  void export_to(numerics::Checkpoint& ck) const;
  static GeneratorModel import_from(const numerics::Checkpoint& ck, const textcore::EncoderConfig& config);
};

// Per-layer Q/V weights with the α-mixed adapters folded in.
std::vector<textcore::ProjectionOverride> adapted_projections(const DecoderParams& decoder, const AdapterBank& bank,
                                                              const Tensor& alpha);

// [BOS] first max_prefix description tokens [SEP].
TokenIds build_prompt(std::span<const std::size_t> description, std::size_t max_prefix);

/// Logits for positions [from, len) of a full causal pass over `ids`.
/// `overrides` may be empty (base model) or hold one entry per layer.
Tensor decoder_logits(std::span<const std::size_t> ids, const DecoderParams& decoder,
                      const std::vector<textcore::ProjectionOverride>& overrides, std::size_t from = 0);

/// Key/value cache for incremental decoding.
class DecoderCache {
 public:
  DecoderCache(const DecoderParams& decoder, std::vector<textcore::ProjectionOverride> overrides);

  // Feeds `ids` at the next positions; returns logits of the last one.
  std::vector<double> feed(std::span<const std::size_t> ids);
  std::size_t length() const { return length_; }

 private:
  const DecoderParams& decoder_;
  std::vector<textcore::ProjectionOverride> overrides_;
  std::vector<Tensor> keys_, values_;
  std::size_t length_ = 0;
};

}  // namespace claimforge::generator

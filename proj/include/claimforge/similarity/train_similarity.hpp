#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "claimforge/similarity/similarity.hpp"
#include "claimforge/textcore/encoder.hpp"
#include "claimforge/training/train_log.hpp"

namespace claimforge::similarity {

struct RelationPair {
  textcore::TokenIds claim;
  textcore::TokenIds doc;
  std::optional<std::size_t> label;  // relationship group, when known
  bool related = true;               // unrelated pairs only serve as negatives
};

struct SimilarityTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 4;
  double lr = 5e-5;
  double weight_decay = 0.01;
  double temperature = 0.1;
  double aux_weight = 0.5;  // λ on the head-group cross-entropy
  double clip_norm = 1.0;
  bool train_encoder = true;
  std::uint64_t seed = 0;
};

struct BatchLoss {
  Tensor total;
  double contrastive = 0.0;
  double auxiliary = 0.0;
};

/// Contrastive loss over the batch similarity matrix S_ij = similarity(claim_i,
/// doc_j), anchored on related pairs, plus λ·(−log group mass of the label)
/// for labeled related pairs.
BatchLoss similarity_batch_loss(const std::vector<const RelationPair*>& batch, const textcore::EncoderParams& encoder,
                                const HeadBank& bank, const SimilarityTrainConfig& config);

// Shuffled mini-batches each epoch; one log record per optimizer step.
training::TrainLog train_similarity(const std::vector<RelationPair>& pairs, textcore::EncoderParams& encoder,
                                    HeadBank& bank, const SimilarityTrainConfig& config,
                                    training::TrainLog log = {});

}  // namespace claimforge::similarity

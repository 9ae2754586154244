#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "claimforge/similarity/head_bank.hpp"

namespace claimforge::similarity {

// Token states of one chunk with the head projections applied.
struct ProjectedChunk {
  Tensor pooled;  // 1 × model_dim mean of the states
  Tensor q;       // n × 512, claim side
  Tensor k, v;    // n × 512, document side
};

ProjectedChunk project_claim(const Tensor& states, const HeadBank& bank);
ProjectedChunk project_doc(const Tensor& states, const HeadBank& bank);

// softmax(φ([c; d; c ⊙ d])) as a 1 × 8 row.
Tensor head_weights(const Tensor& claim_repr, const Tensor& doc_repr, const HeadBank& bank);

// cosine(mean(attention_h(Q, K, V)), mean(Q_h)) for every head, 1 × 8.
Tensor head_scores(const ProjectedChunk& claim, const ProjectedChunk& doc);

struct SimilarityForward {
  Tensor scores;        // 1 × 8
  Tensor weights;       // 1 × 8
  Tensor similarity;    // 1 × 1
  Tensor group_masses;  // 1 × 4
};

SimilarityForward similarity_forward(const ProjectedChunk& claim, const ProjectedChunk& doc, const HeadBank& bank);

// Convenience over raw token states (rows = tokens).
SimilarityForward similarity_forward(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank);
double head_score(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank, std::size_t head);

struct SimilarityReport {
  std::string claim_chunk_id;
  std::string doc_chunk_id;
  std::array<double, kNumHeads> head_scores{};
  std::array<double, kNumHeads> head_weights{};
  double similarity = 0.0;
  std::size_t relationship_label = 0;
  std::array<double, kNumGroups> group_masses{};

  const char* relationship_name() const { return kRelationshipNames[relationship_label]; }
};

// Fills similarity, group masses and the argmax label from scores and weights.
SimilarityReport assemble_report(std::string claim_chunk_id, std::string doc_chunk_id,
                                 const std::array<double, kNumHeads>& scores,
                                 const std::array<double, kNumHeads>& weights);

SimilarityReport similarity(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank,
                            std::string claim_chunk_id = "", std::string doc_chunk_id = "");

std::string to_json_line(const SimilarityReport& report);

}  // namespace claimforge::similarity

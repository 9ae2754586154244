#include "claimforge/similarity/similarity.hpp"

#include <nlohmann/json.hpp>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::similarity {

namespace nx = numerics;

namespace {

void check_states(const Tensor& states, const HeadBank& bank) {
  if (!states.defined() || states.numel() == 0) throw SimilarityError("empty chunk states");
  if (states.cols() != bank.model_dim) {
    throw SimilarityError("chunk states have width " + std::to_string(states.cols()) + ", head bank expects " +
                          std::to_string(bank.model_dim));
  }
}

Tensor group_matrix() {
  std::vector<double> g(kNumHeads * kNumGroups, 0.0);
  for (std::size_t h = 0; h < kNumHeads; ++h) g[h * kNumGroups + head_group(h)] = 1.0;
  return Tensor::matrix(kNumHeads, kNumGroups, std::move(g));
}

}  // namespace

ProjectedChunk project_claim(const Tensor& states, const HeadBank& bank) {
  check_states(states, bank);
  return {nx::mean_rows(states), nx::linear(states, bank.wq, Tensor()), Tensor(), Tensor()};
}

ProjectedChunk project_doc(const Tensor& states, const HeadBank& bank) {
  check_states(states, bank);
  return {nx::mean_rows(states), Tensor(), nx::linear(states, bank.wk, Tensor()),
          nx::linear(states, bank.wv, Tensor())};
}

Tensor head_weights(const Tensor& claim_repr, const Tensor& doc_repr, const HeadBank& bank) {
  if (claim_repr.numel() != bank.model_dim || doc_repr.numel() != bank.model_dim) {
    throw SimilarityError("head weights: representation width mismatch (claim " +
                          std::to_string(claim_repr.numel()) + ", doc " + std::to_string(doc_repr.numel()) +
                          ", expected " + std::to_string(bank.model_dim) + ")");
  }
  Tensor x = nx::concat_cols({claim_repr, doc_repr, nx::mul(claim_repr, doc_repr)});
  Tensor hidden = nx::tanh(nx::linear(x, bank.phi_w1, bank.phi_b1));
  return nx::softmax_rows(nx::linear(hidden, bank.phi_w2, bank.phi_b2));
}

Tensor head_scores(const ProjectedChunk& claim, const ProjectedChunk& doc) {
  Tensor attended = nx::multi_head_attention(claim.q, doc.k, doc.v, kNumHeads);
  Tensor a_pool = nx::mean_rows(attended);
  Tensor q_pool = nx::mean_rows(claim.q);
  std::vector<Tensor> scores;
  scores.reserve(kNumHeads);
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    scores.push_back(nx::cosine(nx::slice_cols(a_pool, h * kHeadDim, (h + 1) * kHeadDim),
                                nx::slice_cols(q_pool, h * kHeadDim, (h + 1) * kHeadDim)));
  }
  return nx::concat_cols(scores);
}

SimilarityForward similarity_forward(const ProjectedChunk& claim, const ProjectedChunk& doc, const HeadBank& bank) {
  static const Tensor groups = group_matrix();
  SimilarityForward f;
  f.scores = head_scores(claim, doc);
  f.weights = head_weights(claim.pooled, doc.pooled, bank);
  f.similarity = nx::sum(nx::mul(f.weights, f.scores));
  f.group_masses = nx::matmul(f.weights, groups);
  return f;
}

SimilarityForward similarity_forward(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank) {
  return similarity_forward(project_claim(claim_states, bank), project_doc(doc_states, bank), bank);
}

double head_score(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank, std::size_t head) {
  if (head >= kNumHeads) throw SimilarityError("head index out of range");
  nx::NoGradGuard no_grad;
  return head_scores(project_claim(claim_states, bank), project_doc(doc_states, bank)).data()[head];
}

SimilarityReport assemble_report(std::string claim_chunk_id, std::string doc_chunk_id,
                                 const std::array<double, kNumHeads>& scores,
                                 const std::array<double, kNumHeads>& weights) {
  SimilarityReport r;
  r.claim_chunk_id = std::move(claim_chunk_id);
  r.doc_chunk_id = std::move(doc_chunk_id);
  r.head_scores = scores;
  r.head_weights = weights;
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    r.similarity += weights[h] * scores[h];
    r.group_masses[head_group(h)] += weights[h];
  }
  for (std::size_t g = 1; g < kNumGroups; ++g) {
    if (r.group_masses[g] > r.group_masses[r.relationship_label]) r.relationship_label = g;
  }
  return r;
}

SimilarityReport similarity(const Tensor& claim_states, const Tensor& doc_states, const HeadBank& bank,
                            std::string claim_chunk_id, std::string doc_chunk_id) {
  nx::NoGradGuard no_grad;
  auto f = similarity_forward(claim_states, doc_states, bank);
  std::array<double, kNumHeads> scores{}, weights{};
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    scores[h] = f.scores.data()[h];
    weights[h] = f.weights.data()[h];
  }
  return assemble_report(std::move(claim_chunk_id), std::move(doc_chunk_id), scores, weights);
}

std::string to_json_line(const SimilarityReport& r) {
  nlohmann::ordered_json j;
  j["claim_chunk"] = r.claim_chunk_id;
  j["doc_chunk"] = r.doc_chunk_id;
  j["head_scores"] = r.head_scores;
  j["head_weights"] = r.head_weights;
  j["similarity"] = r.similarity;
  j["relationship"] = r.relationship_name();
  j["group_masses"] = r.group_masses;
  return j.dump();
}

}  // namespace claimforge::similarity

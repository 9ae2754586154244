#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "claimforge/generator/adapter_bank.hpp"

namespace claimforge::generator {

inline constexpr std::size_t kDefaultClassifierHidden = 64;

/// f_domain: a one-hidden-layer tanh MLP from a model_dim feature row to five
/// domain logits, in chunker::kDomainNames order.
struct DomainClassifier {
  Tensor w1, b1, w2, b2;

  static DomainClassifier init(std::size_t model_dim, numerics::Rng& rng,
                               std::size_t hidden = kDefaultClassifierHidden);

  Tensor logits(const Tensor& features) const;
  // softmax(logits), 1 × 5.
  Tensor mixture(const Tensor& features) const;

  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck, const std::string& prefix) const;
  static DomainClassifier import_from(const numerics::Checkpoint& ck, const std::string& prefix);
};

// Mean of the token-embedding rows of `ids`, 1 × model_dim.
Tensor description_features(std::span<const std::size_t> ids, const Tensor& token_embedding);

struct DomainPrediction {
  std::array<double, kNumDomains> alpha{};
  std::size_t label = 0;
  double confidence = 0.0;
};

DomainPrediction predict_domain(const Tensor& features, const DomainClassifier& classifier);

}  // namespace claimforge::generator

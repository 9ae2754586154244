#include "claimforge/generator/domain_classifier.hpp"

#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::generator {

namespace nx = numerics;

DomainClassifier DomainClassifier::init(std::size_t model_dim, nx::Rng& rng, std::size_t hidden) {
  DomainClassifier c;
  c.w1 = nx::normal_tensor({hidden, model_dim}, 1.0 / std::sqrt(static_cast<double>(model_dim)), rng, true);
  c.b1 = Tensor::zeros({1, hidden}, true);
  c.w2 = nx::normal_tensor({kNumDomains, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng, true);
  c.b2 = Tensor::zeros({1, kNumDomains}, true);
  return c;
}

Tensor DomainClassifier::logits(const Tensor& features) const {
  if (features.numel() != w1.cols()) {
    throw GeneratorError("classifier expects " + std::to_string(w1.cols()) + " features, got " +
                         std::to_string(features.numel()));
  }
  return nx::linear(nx::tanh(nx::linear(features, w1, b1)), w2, b2);
}

Tensor DomainClassifier::mixture(const Tensor& features) const { return nx::softmax_rows(logits(features)); }

std::vector<Tensor> DomainClassifier::parameters() const { return {w1, b1, w2, b2}; }

void DomainClassifier::export_to(nx::Checkpoint& ck, const std::string& prefix) const {
  ck.tensors[prefix + "w1"] = w1;
  ck.tensors[prefix + "b1"] = b1;
  ck.tensors[prefix + "w2"] = w2;
  ck.tensors[prefix + "b2"] = b2;
}

DomainClassifier DomainClassifier::import_from(const nx::Checkpoint& ck, const std::string& prefix) {
  auto load = [&](const char* name) {
    const auto& t = ck.at(prefix + name);
    return Tensor(t.shape(), t.to_vector(), true);
  };
  DomainClassifier c{load("w1"), load("b1"), load("w2"), load("b2")};
  if (c.w2.rows() != kNumDomains) throw GeneratorError("classifier checkpoint does not have 5 outputs");
  return c;
}

Tensor description_features(std::span<const std::size_t> ids, const Tensor& token_embedding) {
  if (ids.empty()) throw GeneratorError("empty document");
  return nx::mean_rows(nx::embedding(token_embedding, ids));
}

DomainPrediction predict_domain(const Tensor& features, const DomainClassifier& classifier) {
  nx::NoGradGuard no_grad;
  Tensor mix = classifier.mixture(features);
  auto alpha = mix.data();
  DomainPrediction p;
  for (std::size_t d = 0; d < kNumDomains; ++d) {
    p.alpha[d] = alpha[d];
    if (alpha[d] > alpha[p.label]) p.label = d;
  }
  p.confidence = p.alpha[p.label];
  return p;
}

}  // namespace claimforge::generator

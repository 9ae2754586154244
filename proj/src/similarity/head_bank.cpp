#include "claimforge/similarity/head_bank.hpp"

#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::similarity {

namespace nx = numerics;

std::size_t relationship_index(std::string_view name) {
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    if (name == kRelationshipNames[g]) return g;
  }
  throw SimilarityError("unknown relationship '" + std::string(name) + "'");
}

HeadBank HeadBank::init(std::size_t model_dim, nx::Rng& rng, std::size_t phi_hidden) {
  if (model_dim == 0 || phi_hidden == 0) throw SimilarityError("head bank sizes must be positive");
  HeadBank b;
  b.model_dim = model_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(model_dim));
  b.wq = nx::normal_tensor({kNumHeads * kHeadDim, model_dim}, s, rng, true);
  b.wk = nx::normal_tensor({kNumHeads * kHeadDim, model_dim}, s, rng, true);
  b.wv = nx::normal_tensor({kNumHeads * kHeadDim, model_dim}, s, rng, true);
  b.phi_w1 = nx::normal_tensor({phi_hidden, 3 * model_dim}, 1.0 / std::sqrt(3.0 * model_dim), rng, true);
  b.phi_b1 = Tensor::zeros({1, phi_hidden}, true);
  b.phi_w2 = nx::normal_tensor({kNumHeads, phi_hidden}, 1.0 / std::sqrt(static_cast<double>(phi_hidden)), rng,
                               true);
  b.phi_b2 = Tensor::zeros({1, kNumHeads}, true);
  return b;
}

Tensor HeadBank::projection(std::size_t head, char which) const {
  if (head >= kNumHeads) throw SimilarityError("head index out of range");
  const Tensor& w = which == 'q' ? wq : which == 'k' ? wk : wv;
  return nx::slice_rows(w, head * kHeadDim, (head + 1) * kHeadDim);
}

std::vector<Tensor> HeadBank::parameters() const { return {wq, wk, wv, phi_w1, phi_b1, phi_w2, phi_b2}; }

namespace {

const char* const kNames[] = {"wq", "wk", "wv", "phi_w1", "phi_b1", "phi_w2", "phi_b2"};

}  // namespace

void HeadBank::export_to(nx::Checkpoint& ck, const std::string& prefix) const {
  auto ps = parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) ck.tensors[prefix + kNames[i]] = ps[i];
}

HeadBank HeadBank::import_from(const nx::Checkpoint& ck, const std::string& prefix) {
  HeadBank b;
  Tensor* slots[] = {&b.wq, &b.wk, &b.wv, &b.phi_w1, &b.phi_b1, &b.phi_w2, &b.phi_b2};
  for (std::size_t i = 0; i < 7; ++i) {
    const Tensor& t = ck.at(prefix + kNames[i]);
    *slots[i] = Tensor(t.shape(), t.to_vector(), true);
  }
  b.model_dim = b.wq.cols();
  if (b.wq.rows() != kNumHeads * kHeadDim || b.phi_w1.cols() != 3 * b.model_dim || b.phi_w2.rows() != kNumHeads) {
    throw SimilarityError("head bank checkpoint has inconsistent shapes");
  }
  return b;
}

}  // namespace claimforge::similarity

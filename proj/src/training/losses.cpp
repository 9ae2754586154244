#include "claimforge/training/losses.hpp"

#include <numeric>
#include <vector>

#include "claimforge/training/curriculum.hpp"

namespace claimforge::training {

namespace nx = numerics;

Tensor contrastive_loss(const Tensor& similarities, double temperature) {
  if (!(temperature > 0.0)) throw TrainingError("contrastive temperature must be positive");
  if (similarities.rows() != similarities.cols()) {
    throw TrainingError("contrastive loss needs a square similarity matrix, got " +
                        nx::shape_string(similarities.shape()));
  }
  std::vector<std::size_t> targets(similarities.rows());
  std::iota(targets.begin(), targets.end(), 0);
  return nx::cross_entropy(nx::scale(similarities, 1.0 / temperature), targets);
}

Tensor margin_loss(const Tensor& margin, const Tensor& s_pos, const Tensor& s_neg) {
  return nx::relu(nx::sub(margin, nx::sub(s_pos, s_neg)));
}

double margin_loss(double margin, double s_pos, double s_neg) {
  double gap = margin - (s_pos - s_neg);
  return gap > 0.0 ? gap : 0.0;
}

Tensor token_cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  return nx::cross_entropy(logits, targets);
}

}  // namespace claimforge::training

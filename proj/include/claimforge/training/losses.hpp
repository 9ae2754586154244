#pragma once

#include <cstddef>
#include <span>

#include "claimforge/numerics/ops.hpp"
#include "claimforge/training/error.hpp"

namespace claimforge::training {

using numerics::Tensor;

/// In-batch contrastive loss over an (N × N) similarity matrix.
///
/// Row i treats column i as the positive and every column as the
/// denominator: mean_i −log(exp(S_ii/τ) / Σ_j exp(S_ij/τ)).
Tensor contrastive_loss(const Tensor& similarities, double temperature);

// max(0, margin − (s_pos − s_neg)); all 1×1.
Tensor margin_loss(const Tensor& margin, const Tensor& s_pos, const Tensor& s_neg);
double margin_loss(double margin, double s_pos, double s_neg);

// Mean token cross-entropy (targets equal to numerics::kIgnoreTarget skipped).
Tensor token_cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

}  // namespace claimforge::training

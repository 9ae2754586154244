#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "claimforge/numerics/tensor.hpp"

// Differentiable tensor operations. Every op records a graph node when grad
// mode is on and at least one input requires a gradient. Matrix ops treat
// rank-1 tensors as a single row. Results are always rank 2.
namespace claimforge::numerics {

inline constexpr std::size_t kIgnoreTarget = std::numeric_limits<std::size_t>::max();

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// a (n×c) + row (1×c) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
// a * s where s is a 1×1 tensor; differentiable in both.
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);
// a · bᵀ
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// x · Wᵀ + bias, with W stored (out × in). `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor transpose(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Column means over rows: (n×c) -> (1×c).
Tensor mean_rows(const Tensor& a);

// Row-wise softmax; with `causal`, entry (i, j) is zero when j > i + (cols - rows).
Tensor softmax_rows(const Tensor& a, bool causal = false);
Tensor log_softmax_rows(const Tensor& a);
// axis 1 = along each row, axis 0 = along each column.
Tensor softmax(const Tensor& a, std::size_t axis = 1);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log(const Tensor& a);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor pick(const Tensor& a, std::size_t r, std::size_t c);

// Cosine similarity of two equally sized tensors (flattened), as a 1×1 tensor.
// Zero-norm inputs give 0 with zero gradient.
Tensor cosine(const Tensor& a, const Tensor& b);

// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
// Rows whose target is kIgnoreTarget are skipped.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

/// Multi-head scaled dot-product attention.
///
/// q is (n × heads·dk), k is (m × heads·dk), v is (m × heads·dv). Head h uses
/// column block h of each. Output is (n × heads·dv), heads concatenated.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t heads, bool causal = false);

// Single-head softmax(Q Kᵀ / sqrt(dk)) V.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Attention probabilities for each head (no graph), n × m each.
std::vector<Tensor> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads,
                                      bool causal = false);

// Stable softmax on a plain vector.
std::vector<double> softmax(std::span<const double> v);

// Names of all differentiable ops above; the gradient-check suite covers each.
std::span<const std::string_view> registered_ops();

}  // namespace claimforge::numerics

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "claimforge/chunker/document.hpp"
#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/rng.hpp"
#include "claimforge/numerics/tensor.hpp"

namespace claimforge::generator {

using numerics::Tensor;

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kAdapterRank = 8;
inline constexpr std::size_t kNumDomains = chunker::kNumDomains;
// Adapted projections of each decoder layer.
inline constexpr std::array<char, 2> kAdaptedProjections = {'q', 'v'};

// Delta B · Cᵀ with B (out × r) and C (in × r).
struct LowRankAdapter {
  Tensor B;
  Tensor C;

  Tensor delta() const;
};

/// One rank-8 adapter per domain, decoder layer and adapted projection.
struct AdapterBank {
  std::size_t num_layers = 0;
  std::size_t model_dim = 0;
  // adapters[domain][layer][projection index into kAdaptedProjections]
  std::vector<std::vector<std::array<LowRankAdapter, 2>>> adapters;

  // B zero, C ~ N(0, 1/model_dim): the bank starts as an exact no-op.
  static AdapterBank init(std::size_t num_layers, std::size_t model_dim, numerics::Rng& rng);

  const LowRankAdapter& at(std::size_t domain, std::size_t layer, char projection) const;
  LowRankAdapter& at(std::size_t domain, std::size_t layer, char projection);

  std::vector<Tensor> parameters() const;
  // Names: adapter/<domain>/<layer>/<proj>/{B,C}.
  void export_to(numerics::Checkpoint& ck) const;
  static AdapterBank import_from(const numerics::Checkpoint& ck, std::size_t num_layers);
};

/// W + Σ_d α_d · B_d C_dᵀ for one layer and projection; α is a 1 × 5 row.
Tensor effective_projection(const Tensor& base, const AdapterBank& bank, const Tensor& alpha, std::size_t layer,
                            char projection);

}  // namespace claimforge::generator

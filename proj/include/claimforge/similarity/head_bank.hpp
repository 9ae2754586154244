#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/rng.hpp"
#include "claimforge/numerics/tensor.hpp"

namespace claimforge::similarity {

using numerics::Tensor;

class SimilarityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumHeads = 8;
inline constexpr std::size_t kHeadDim = 64;
inline constexpr std::size_t kNumGroups = 4;
inline constexpr std::size_t kDefaultPhiHidden = 64;

// Group order doubles as the tie-break order for relationship labels.
inline constexpr std::array<const char*, kNumGroups> kRelationshipNames = {"equivalence", "improvement",
                                                                           "contradiction", "technical"};

// Heads 2g and 2g+1 (0-based) belong to group g.
constexpr std::size_t head_group(std::size_t head) { return head / 2; }
std::size_t relationship_index(std::string_view name);

/// Eight relationship heads plus the head-weight network φ.
///
/// Head h projects with rows [64h, 64h+64) of wq, wk and wv, each stored as
/// (8·64 × model_dim). φ is a one-hidden-layer tanh MLP from the 3·model_dim
/// pair features to 8 logits.
struct HeadBank {
  std::size_t model_dim = 0;
  Tensor wq, wk, wv;
  Tensor phi_w1, phi_b1, phi_w2, phi_b2;

  static HeadBank init(std::size_t model_dim, numerics::Rng& rng, std::size_t phi_hidden = kDefaultPhiHidden);

  // (64 × model_dim) projection of head h; `which` is 'q', 'k' or 'v'.
  Tensor projection(std::size_t head, char which) const;

  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck, const std::string& prefix) const;
  static HeadBank import_from(const numerics::Checkpoint& ck, const std::string& prefix);
};

}  // namespace claimforge::similarity

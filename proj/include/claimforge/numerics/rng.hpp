#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "claimforge/numerics/tensor.hpp"

namespace claimforge::numerics {

/// Counter-based generator: output i is a fixed hash of (key, i).
///
/// Streams derived with `substream` are independent of how many values the
/// parent has drawn, so named streams compose deterministically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ull)) {}

  Rng substream(std::string_view name) const;
  Rng substream(std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z);
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

Tensor normal_tensor(Shape shape, double stddev, Rng& rng, bool requires_grad = false);
Tensor uniform_tensor(Shape shape, double limit, Rng& rng, bool requires_grad = false);

}  // namespace claimforge::numerics

#include "claimforge/numerics/rng.hpp"

#include <cmath>

namespace claimforge::numerics {

std::uint64_t Rng::mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Rng Rng::substream(std::string_view name) const {
  // FNV-1a over the name, folded into the key.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return Rng(mix(key_ ^ mix(h)), 0);
}

Rng Rng::substream(std::uint64_t index) const { return Rng(mix(key_ + mix(index + 0x243f6a8885a308d3ull)), 0); }

std::uint64_t Rng::next_u64() {
  std::uint64_t x = mix(key_ ^ mix(counter_));
  ++counter_;
  return x;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller; one draw per call keeps the counter arithmetic simple.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw NumericsError("Rng::below(0)");
  // Rejection sampling for an unbiased draw.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  std::vector<double> data(product(shape));
  for (auto& v : data) v = rng.normal() * stddev;
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor uniform_tensor(Shape shape, double limit, Rng& rng, bool requires_grad) {
  std::vector<double> data(product(shape));
  for (auto& v : data) v = rng.uniform(-limit, limit);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

}  // namespace claimforge::numerics

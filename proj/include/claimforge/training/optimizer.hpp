#pragma once

#include <cstddef>
#include <vector>

#include "claimforge/numerics/tensor.hpp"
#include "claimforge/training/error.hpp"

namespace claimforge::training {

using numerics::Tensor;

struct AdamWConfig {
  double lr = 5e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay and bias-corrected moments.
///
/// The parameter list is fixed at construction; moments are matched to
/// parameters by position.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig config = {});

  // Uses each parameter's accumulated gradient (missing gradients count as zero).
  void step();
  // Explicit gradients, one per parameter, shaped like it.
  void step(const std::vector<std::vector<double>>& grads);
  void zero_grad();

  std::size_t step_count() const { return steps_; }
  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t steps_ = 0;
};

double grad_norm(const std::vector<Tensor>& params);

// Scales all gradients so their global L2 norm is at most `max_norm`;
// returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm = 1.0);

}  // namespace claimforge::training

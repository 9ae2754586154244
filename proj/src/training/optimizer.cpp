#include "claimforge/training/optimizer.hpp"

#include <cmath>

#include "claimforge/training/curriculum.hpp"

namespace claimforge::training {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step() {
  std::vector<std::vector<double>> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) {
    if (p.has_grad()) {
      auto g = p.grad();
      grads.emplace_back(g.begin(), g.end());
    } else {
      grads.emplace_back(p.numel(), 0.0);
    }
  }
  step(grads);
}

void AdamW::step(const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params_.size()) throw TrainingError("gradient count does not match parameter count");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params_[i].numel()) {
      throw TrainingError("gradient " + std::to_string(i) + " has " + std::to_string(grads[i].size()) +
                          " entries, parameter has " + std::to_string(params_[i].numel()));
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient for parameter " + std::to_string(i));
    }
  }
  ++steps_;
  const auto& c = config_;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] *= 1.0 - c.lr * c.weight_decay;
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      w[j] -= c.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + c.eps);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double grad_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace claimforge::training

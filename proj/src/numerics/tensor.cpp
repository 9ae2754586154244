#include "claimforge/numerics/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

namespace claimforge::numerics {

namespace {

std::atomic<std::uint64_t> next_id{1};
thread_local bool grad_mode = true;

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw NumericsError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw NumericsError("tensor dimensions must be positive: " + shape_string(shape));
  }
}

}  // namespace

namespace detail {

void accumulate(TensorImpl& t, std::span<const double> g) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

void accumulate(TensorImpl& t, std::size_t index, double g) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  t.grad[index] += g;
}

}  // namespace detail

std::size_t product(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

void require_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericsError(std::string("non-finite value in ") + where);
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (product(shape) != data.size()) {
    throw NumericsError("data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_string(shape));
  }
  require_finite(data, "tensor construction");
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
  impl_->id = next_id.fetch_add(1, std::memory_order_relaxed);
  if (requires_grad) impl_->grad.assign(impl_->data.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  auto n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1, 1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::row(std::vector<double> data, bool requires_grad) {
  auto n = data.size();
  return Tensor({1, n}, std::move(data), requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw NumericsError("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::rows() const { return shape().size() == 2 ? shape()[0] : 1; }
std::size_t Tensor::cols() const { return shape().back(); }
std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!impl_) throw NumericsError("use of undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) throw NumericsError("use of undefined tensor");
  return impl_->data;
}

std::vector<double> Tensor::to_vector() const {
  auto d = data();
  return {d.begin(), d.end()};
}

double Tensor::item() const {
  if (numel() != 1) throw NumericsError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) throw NumericsError("index out of range");
  return impl_->data[r * cols() + c];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw NumericsError("tensor has no gradient");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!impl_) throw NumericsError("use of undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(shape(), to_vector(), false); }

Tensor Tensor::clone() const { return Tensor(shape(), to_vector(), requires_grad()); }

std::uint64_t Tensor::id() const { return impl_ ? impl_->id : 0; }

const char* Tensor::op_name() const { return impl_ && impl_->grad_fn ? impl_->grad_fn->op : "leaf"; }

NoGradGuard::NoGradGuard() : previous_(grad_mode) { grad_mode = false; }
NoGradGuard::~NoGradGuard() { grad_mode = previous_; }
bool grad_enabled() { return grad_mode; }

GradientMap backward(const Tensor& loss, std::span<const Tensor> params) {
  if (!loss.defined() || loss.numel() != 1) {
    throw NumericsError("backward() requires a scalar loss");
  }
  using Impl = detail::TensorImpl;

  // Post-order DFS; reversed it is a topological order from the loss.
  std::vector<Impl*> order;
  std::vector<Impl*> leaves;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, std::size_t>> stack;
  auto* root = loss.impl().get();
  if (root->requires_grad) {
    stack.emplace_back(root, 0);
    visited.insert(root);
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->grad_fn && next < node->grad_fn->inputs.size()) {
      Impl* child = node->grad_fn->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    if (node->grad_fn) {
      order.push_back(node);
    } else {
      leaves.push_back(node);
    }
    stack.pop_back();
  }

  if (root->requires_grad) {
    detail::accumulate(*root, std::vector<double>{1.0});
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Impl* node = *it;
      if (node->grad.empty()) continue;
      node->grad_fn->apply(*node->grad_fn, node->grad);
    }
    // Interior gradients are scratch space.
    for (Impl* node : order) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }

  GradientMap result;
  for (Impl* leaf : leaves) {
    if (leaf->grad.empty()) leaf->grad.assign(leaf->data.size(), 0.0);
    result.emplace(leaf->id, Tensor(leaf->shape, leaf->grad));
  }
  for (const Tensor& p : params) {
    if (!p.defined() || result.count(p.id())) continue;
    spdlog::warn("parameter {} {} is disconnected from the loss; gradient set to zero", p.id(),
                 shape_string(p.shape()));
    result.emplace(p.id(), Tensor::zeros(p.shape()));
  }
  return result;
}

}  // namespace claimforge::numerics

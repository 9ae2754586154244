#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace claimforge::numerics {

using Shape = std::vector<std::size_t>;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Tensor;

namespace detail {

struct GradFn;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation for non-leaves
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::shared_ptr<GradFn> grad_fn;
};

// One recorded operation. `apply` receives the gradient of the op output and
// accumulates into `inputs`.
struct GradFn {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(GradFn&, std::span<const double>)> apply;
};

void accumulate(TensorImpl& t, std::span<const double> g);
void accumulate(TensorImpl& t, std::size_t index, double g);

}  // namespace detail

/// Dense row-major tensor of 64-bit reals with optional gradient tracking.
///
/// Tensors are rank 1 or 2. Rank-1 tensors behave as a single row in matrix
/// ops. Copies share storage; use `clone()` for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data, bool requires_grad = false);
  static Tensor row(std::vector<double> data, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Parameter initialization and optimizer updates write through this.
  std::span<double> mutable_data();
  std::vector<double> to_vector() const;
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  Tensor detach() const;
  Tensor clone() const;
  std::uint64_t id() const;
  const char* op_name() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  static Tensor wrap(std::shared_ptr<detail::TensorImpl> impl);

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

std::size_t product(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

using GradientMap = std::map<std::uint64_t, Tensor>;

/// Reverse-mode sweep from a scalar loss.
///
/// Every reachable leaf with requires_grad receives its gradient (accumulated
/// into the leaf's grad buffer). Tensors listed in `params` that the loss does
/// not reach get a zero gradient and a logged warning.
GradientMap backward(const Tensor& loss, std::span<const Tensor> params = {});

/// Throws NumericsError when any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* where);

}  // namespace claimforge::numerics

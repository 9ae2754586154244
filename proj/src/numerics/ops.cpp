#include "claimforge/numerics/ops.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace claimforge::numerics {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;
using Impl = detail::TensorImpl;
using BackwardFn = std::function<void(detail::GradFn&, std::span<const double>)>;

std::atomic<std::uint64_t> result_ids{1ull << 62};

CMap view(const Tensor& t) { return CMap(t.data().data(), t.rows(), t.cols()); }
CMap view(std::span<const double> d, std::size_t r, std::size_t c) { return CMap(d.data(), r, c); }

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> data, const char* op,
                   std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
#ifndef NDEBUG
  require_finite(data, op);
#endif
  auto impl = std::make_shared<Impl>();
  impl->shape = {rows, cols};
  impl->data = std::move(data);
  impl->id = result_ids.fetch_add(1, std::memory_order_relaxed);
  if (wants_grad(inputs)) {
    impl->requires_grad = true;
    auto node = std::make_shared<detail::GradFn>();
    node->op = op;
    for (const Tensor* t : inputs) node->inputs.push_back(t->impl());
    node->apply = std::move(fn);
    impl->grad_fn = std::move(node);
  }
  return Tensor::wrap(std::move(impl));
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> data, const char* op,
                   const std::vector<Tensor>& inputs, BackwardFn fn) {
#ifndef NDEBUG
  require_finite(data, op);
#endif
  auto impl = std::make_shared<Impl>();
  impl->shape = {rows, cols};
  impl->data = std::move(data);
  impl->id = result_ids.fetch_add(1, std::memory_order_relaxed);
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (grad_enabled() && any) {
    impl->requires_grad = true;
    auto node = std::make_shared<detail::GradFn>();
    node->op = op;
    for (const auto& t : inputs) node->inputs.push_back(t.impl());
    node->apply = std::move(fn);
    impl->grad_fn = std::move(node);
  }
  return Tensor::wrap(std::move(impl));
}

Impl& input(detail::GradFn& node, std::size_t i) { return *node.inputs[i]; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw NumericsError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
  }
}

void accumulate_matrix(Impl& t, const RowMat& g) {
  detail::accumulate(t, std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Row-wise softmax into `out`. Entries past `limit(i)` are zero.
void softmax_rows_into(std::span<const double> x, std::size_t rows, std::size_t cols, bool causal,
                       std::span<double> out) {
  const long offset = static_cast<long>(cols) - static_cast<long>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t valid = cols;
    if (causal) {
      long last = static_cast<long>(i) + offset;
      if (last < 0) throw NumericsError("causal softmax: row has no visible entries");
      valid = std::min<std::size_t>(cols, static_cast<std::size_t>(last) + 1);
    }
    const double* xr = x.data() + i * cols;
    double* yr = out.data() + i * cols;
    double mx = *std::max_element(xr, xr + valid);
    double total = 0.0;
    for (std::size_t j = 0; j < valid; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < valid; ++j) yr[j] /= total;
    for (std::size_t j = valid; j < cols; ++j) yr[j] = 0.0;
  }
}

constexpr std::array<std::string_view, 33> kRegistered = {
    "add",         "sub",          "mul",         "add_row",        "scale",
    "scale_by",    "add_scalar",   "matmul",      "matmul_nt",      "linear",
    "transpose",   "sum",          "mean",        "mean_rows",      "softmax_rows",
    "softmax_causal", "log_softmax_rows", "sigmoid", "tanh",         "gelu",
    "relu",        "log",          "layer_norm",  "embedding",      "concat_cols",
    "concat_rows", "slice_rows",   "slice_cols",  "pick",           "cosine",
    "cross_entropy", "multi_head_attention", "multi_head_attention_causal"};

}  // namespace

std::span<const std::string_view> registered_ops() { return kRegistered; }

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.rows(), a.cols(), std::move(out), "add", {&a, &b},
                     [](detail::GradFn& n, std::span<const double> g) {
                       for (std::size_t k = 0; k < 2; ++k) {
                         if (input(n, k).requires_grad) detail::accumulate(input(n, k), g);
                       }
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.rows(), a.cols(), std::move(out), "sub", {&a, &b},
                     [](detail::GradFn& n, std::span<const double> g) {
                       if (input(n, 0).requires_grad) detail::accumulate(input(n, 0), g);
                       if (input(n, 1).requires_grad) {
                         std::vector<double> neg(g.begin(), g.end());
                         for (auto& v : neg) v = -v;
                         detail::accumulate(input(n, 1), neg);
                       }
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.rows(), a.cols(), std::move(out), "mul", {&a, &b},
                     [](detail::GradFn& n, std::span<const double> g) {
                       Impl& A = input(n, 0);
                       Impl& B = input(n, 1);
                       if (A.requires_grad) {
                         std::vector<double> ga(g.size());
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * B.data[i];
                         detail::accumulate(A, ga);
                       }
                       if (B.requires_grad) {
                         std::vector<double> gb(g.size());
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * A.data[i];
                         detail::accumulate(B, gb);
                       }
                     });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.numel() != a.cols()) {
    throw NumericsError("add_row: row length " + std::to_string(row.numel()) + " vs cols " +
                        std::to_string(a.cols()));
  }
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  auto x = a.data(), b = row.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[i * c + j] + b[j];
  return make_result(r, c, std::move(out), "add_row", {&a, &row},
                     [r, c](detail::GradFn& n, std::span<const double> g) {
                       if (input(n, 0).requires_grad) detail::accumulate(input(n, 0), g);
                       if (input(n, 1).requires_grad) {
                         std::vector<double> gb(c, 0.0);
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                         detail::accumulate(input(n, 1), gb);
                       }
                     });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * s;
  return make_result(a.rows(), a.cols(), std::move(out), "scale", {&a},
                     [s](detail::GradFn& n, std::span<const double> g) {
                       std::vector<double> ga(g.begin(), g.end());
                       for (auto& v : ga) v *= s;
                       detail::accumulate(input(n, 0), ga);
                     });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1) throw NumericsError("scale_by: scale must be a single value");
  const double sv = s.item();
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * sv;
  return make_result(a.rows(), a.cols(), std::move(out), "scale_by", {&a, &s},
                     [](detail::GradFn& n, std::span<const double> g) {
                       Impl& A = input(n, 0);
                       Impl& S = input(n, 1);
                       if (A.requires_grad) {
                         std::vector<double> ga(g.begin(), g.end());
                         for (auto& v : ga) v *= S.data[0];
                         detail::accumulate(A, ga);
                       }
                       if (S.requires_grad) {
                         double acc = 0.0;
                         for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * A.data[i];
                         detail::accumulate(S, 0, acc);
                       }
                     });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + s;
  return make_result(a.rows(), a.cols(), std::move(out), "add_scalar", {&a},
                     [](detail::GradFn& n, std::span<const double> g) { detail::accumulate(input(n, 0), g); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw NumericsError("matmul: inner dimensions " + shape_string(a.shape()) + " x " +
                        shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m);
  MMap(out.data(), n, m).noalias() = view(a) * view(b);
  return make_result(n, m, std::move(out), "matmul", {&a, &b},
                     [n, k, m](detail::GradFn& node, std::span<const double> g) {
                       Impl& A = input(node, 0);
                       Impl& B = input(node, 1);
                       CMap G = view(g, n, m);
                       if (A.requires_grad) {
                         RowMat ga = G * view(B.data, k, m).transpose();
                         accumulate_matrix(A, ga);
                       }
                       if (B.requires_grad) {
                         RowMat gb = view(A.data, n, k).transpose() * G;
                         accumulate_matrix(B, gb);
                       }
                     });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw NumericsError("matmul_nt: inner dimensions " + shape_string(a.shape()) + " x " +
                        shape_string(b.shape()) + "^T");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  std::vector<double> out(n * m);
  MMap(out.data(), n, m).noalias() = view(a) * view(b).transpose();
  return make_result(n, m, std::move(out), "matmul_nt", {&a, &b},
                     [n, k, m](detail::GradFn& node, std::span<const double> g) {
                       Impl& A = input(node, 0);
                       Impl& B = input(node, 1);
                       CMap G = view(g, n, m);
                       if (A.requires_grad) {
                         RowMat ga = G * view(B.data, m, k);
                         accumulate_matrix(A, ga);
                       }
                       if (B.requires_grad) {
                         RowMat gb = G.transpose() * view(A.data, n, k);
                         accumulate_matrix(B, gb);
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.cols() != weight.cols()) {
    throw NumericsError("linear: input " + shape_string(x.shape()) + " vs weight " +
                        shape_string(weight.shape()));
  }
  const std::size_t n = x.rows(), in = x.cols(), out_dim = weight.rows();
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != out_dim) throw NumericsError("linear: bias length mismatch");
  std::vector<double> out(n * out_dim);
  MMap o(out.data(), n, out_dim);
  o.noalias() = view(x) * view(weight).transpose();
  if (has_bias) {
    auto b = bias.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < out_dim; ++j) out[i * out_dim + j] += b[j];
  }
  BackwardFn fn = [n, in, out_dim, has_bias](detail::GradFn& node, std::span<const double> g) {
    Impl& X = input(node, 0);
    Impl& W = input(node, 1);
    CMap G = view(g, n, out_dim);
    if (X.requires_grad) {
      RowMat gx = G * view(W.data, out_dim, in);
      accumulate_matrix(X, gx);
    }
    if (W.requires_grad) {
      RowMat gw = G.transpose() * view(X.data, n, in);
      accumulate_matrix(W, gw);
    }
    if (has_bias && input(node, 2).requires_grad) {
      Eigen::RowVectorXd gb = G.colwise().sum();
      detail::accumulate(input(node, 2), std::span<const double>(gb.data(), out_dim));
    }
  };
  if (has_bias) return make_result(n, out_dim, std::move(out), "linear", {&x, &weight, &bias}, fn);
  return make_result(n, out_dim, std::move(out), "linear", {&x, &weight}, fn);
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  MMap(out.data(), c, r) = view(a).transpose();
  return make_result(c, r, std::move(out), "transpose", {&a},
                     [r, c](detail::GradFn& n, std::span<const double> g) {
                       RowMat ga = view(g, c, r).transpose();
                       accumulate_matrix(input(n, 0), ga);
                     });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result(1, 1, {total}, "sum", {&a}, [](detail::GradFn& n, std::span<const double> g) {
    std::vector<double> ga(input(n, 0).data.size(), g[0]);
    detail::accumulate(input(n, 0), ga);
  });
}

Tensor mean(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  const double count = static_cast<double>(a.numel());
  return make_result(1, 1, {total / count}, "mean", {&a},
                     [count](detail::GradFn& n, std::span<const double> g) {
                       std::vector<double> ga(input(n, 0).data.size(), g[0] / count);
                       detail::accumulate(input(n, 0), ga);
                     });
}

Tensor mean_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
  for (auto& v : out) v /= static_cast<double>(r);
  return make_result(1, c, std::move(out), "mean_rows", {&a},
                     [r, c](detail::GradFn& n, std::span<const double> g) {
                       std::vector<double> ga(r * c);
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) ga[i * c + j] = g[j] / static_cast<double>(r);
                       detail::accumulate(input(n, 0), ga);
                     });
}

Tensor softmax_rows(const Tensor& a, bool causal) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  softmax_rows_into(a.data(), r, c, causal, out);
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_result(r, c, std::move(out), "softmax_rows", {&a},
                     [r, c, saved](detail::GradFn& n, std::span<const double> g) {
                       const auto& y = *saved;
                       std::vector<double> ga(r * c);
                       for (std::size_t i = 0; i < r; ++i) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                         for (std::size_t j = 0; j < c; ++j) ga[i * c + j] = y[i * c + j] * (g[i * c + j] - dot);
                       }
                       detail::accumulate(input(n, 0), ga);
                     });
}

Tensor log_softmax_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data() + i * c;
    double mx = *std::max_element(xr, xr + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(xr[j] - mx);
    double lse = mx + std::log(total);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xr[j] - lse;
  }
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_result(r, c, std::move(out), "log_softmax_rows", {&a},
                     [r, c, saved](detail::GradFn& n, std::span<const double> g) {
                       const auto& y = *saved;
                       std::vector<double> ga(r * c);
                       for (std::size_t i = 0; i < r; ++i) {
                         double gs = 0.0;
                         for (std::size_t j = 0; j < c; ++j) gs += g[i * c + j];
                         for (std::size_t j = 0; j < c; ++j)
                           ga[i * c + j] = g[i * c + j] - std::exp(y[i * c + j]) * gs;
                       }
                       detail::accumulate(input(n, 0), ga);
                     });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  if (axis == 1) return softmax_rows(a);
  if (axis == 0) return transpose(softmax_rows(transpose(a)));
  throw NumericsError("softmax: axis must be 0 or 1");
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw NumericsError("softmax: empty input");
  require_finite(v, "softmax input");
  std::vector<double> out(v.size());
  softmax_rows_into(v, 1, v.size(), false, out);
  return out;
}

namespace {

template <typename F, typename D>
Tensor unary(const Tensor& a, const char* op, F f, D derivative_from_xy) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  auto saved = std::make_shared<std::vector<double>>(out);
  return make_result(a.rows(), a.cols(), std::move(out), op, {&a},
                     [saved, derivative_from_xy](detail::GradFn& n, std::span<const double> g) {
                       Impl& A = input(n, 0);
                       std::vector<double> ga(g.size());
                       for (std::size_t i = 0; i < g.size(); ++i)
                         ga[i] = g[i] * derivative_from_xy(A.data[i], (*saved)[i]);
                       detail::accumulate(A, ga);
                     });
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); },
      [](double x, double) {
        double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
      });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw NumericsError("log: non-positive input");
  }
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.numel() != c || bias.numel() != c) throw NumericsError("layer_norm: parameter length mismatch");
  auto xd = x.data(), gd = gain.data(), bd = bias.data();
  std::vector<double> out(r * c);
  auto xhat = std::make_shared<std::vector<double>>(r * c);
  auto rstd = std::make_shared<std::vector<double>>(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xd[i * c + j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xd[i * c + j] - mu) * (xd[i * c + j] - mu);
    var /= static_cast<double>(c);
    double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = rs;
    for (std::size_t j = 0; j < c; ++j) {
      double h = (xd[i * c + j] - mu) * rs;
      (*xhat)[i * c + j] = h;
      out[i * c + j] = h * gd[j] + bd[j];
    }
  }
  return make_result(r, c, std::move(out), "layer_norm", {&x, &gain, &bias},
                     [r, c, xhat, rstd](detail::GradFn& n, std::span<const double> g) {
                       Impl& X = input(n, 0);
                       Impl& G = input(n, 1);
                       Impl& B = input(n, 2);
                       const auto& h = *xhat;
                       if (G.requires_grad || B.requires_grad) {
                         std::vector<double> gg(c, 0.0), gb(c, 0.0);
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) {
                             gg[j] += g[i * c + j] * h[i * c + j];
                             gb[j] += g[i * c + j];
                           }
                         if (G.requires_grad) detail::accumulate(G, gg);
                         if (B.requires_grad) detail::accumulate(B, gb);
                       }
                       if (X.requires_grad) {
                         std::vector<double> gx(r * c);
                         const double cd = static_cast<double>(c);
                         for (std::size_t i = 0; i < r; ++i) {
                           double m1 = 0.0, m2 = 0.0;
                           for (std::size_t j = 0; j < c; ++j) {
                             double dh = g[i * c + j] * G.data[j];
                             m1 += dh;
                             m2 += dh * h[i * c + j];
                           }
                           m1 /= cd;
                           m2 /= cd;
                           for (std::size_t j = 0; j < c; ++j) {
                             double dh = g[i * c + j] * G.data[j];
                             gx[i * c + j] = (*rstd)[i] * (dh - m1 - h[i * c + j] * m2);
                           }
                         }
                         detail::accumulate(X, gx);
                       }
                     });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  if (ids.empty()) throw NumericsError("embedding: empty id sequence");
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  auto t = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw NumericsError("embedding: id " + std::to_string(ids[i]) + " out of range for vocabulary of " +
                          std::to_string(vocab));
    }
    std::copy_n(t.begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  std::vector<std::size_t> saved(ids.begin(), ids.end());
  return make_result(ids.size(), d, std::move(out), "embedding", {&table},
                     [saved, d](detail::GradFn& n, std::span<const double> g) {
                       Impl& T = input(n, 0);
                       if (T.grad.empty()) T.grad.assign(T.data.size(), 0.0);
                       for (std::size_t i = 0; i < saved.size(); ++i)
                         for (std::size_t j = 0; j < d; ++j) T.grad[saved[i] * d + j] += g[i * d + j];
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw NumericsError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw NumericsError("concat_cols: row count mismatch");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto d = p.data();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(i * w), w, out.begin() + static_cast<std::ptrdiff_t>(i * total + offset));
    offset += w;
  }
  return make_result(r, total, std::move(out), "concat_cols", parts,
                     [r, total, widths](detail::GradFn& n, std::span<const double> g) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         const std::size_t w = widths[k];
                         if (n.inputs[k]->requires_grad) {
                           std::vector<double> gp(r * w);
                           for (std::size_t i = 0; i < r; ++i)
                             for (std::size_t j = 0; j < w; ++j) gp[i * w + j] = g[i * total + off + j];
                           detail::accumulate(*n.inputs[k], gp);
                         }
                         off += w;
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw NumericsError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::vector<std::size_t> sizes;
  std::vector<double> out;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw NumericsError("concat_rows: column count mismatch");
    auto d = p.data();
    out.insert(out.end(), d.begin(), d.end());
    sizes.push_back(p.numel());
    rows += p.rows();
  }
  return make_result(rows, c, std::move(out), "concat_rows", parts,
                     [sizes](detail::GradFn& n, std::span<const double> g) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < sizes.size(); ++k) {
                         if (n.inputs[k]->requires_grad) detail::accumulate(*n.inputs[k], g.subspan(off, sizes[k]));
                         off += sizes[k];
                       }
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows()) throw NumericsError("slice_rows: invalid range");
  const std::size_t c = a.cols();
  auto d = a.data();
  std::vector<double> out(d.begin() + static_cast<std::ptrdiff_t>(begin * c), d.begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result(end - begin, c, std::move(out), "slice_rows", {&a},
                     [begin, end, c](detail::GradFn& n, std::span<const double> g) {
                       Impl& A = input(n, 0);
                       if (A.grad.empty()) A.grad.assign(A.data.size(), 0.0);
                       for (std::size_t i = 0; i < (end - begin) * c; ++i) A.grad[begin * c + i] += g[i];
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) throw NumericsError("slice_cols: invalid range");
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  auto d = a.data();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = d[i * c + begin + j];
  return make_result(r, w, std::move(out), "slice_cols", {&a},
                     [r, c, w, begin](detail::GradFn& n, std::span<const double> g) {
                       Impl& A = input(n, 0);
                       if (A.grad.empty()) A.grad.assign(A.data.size(), 0.0);
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < w; ++j) A.grad[i * c + begin + j] += g[i * w + j];
                     });
}

Tensor pick(const Tensor& a, std::size_t r, std::size_t c) {
  const std::size_t index = r * a.cols() + c;
  double v = a.at(r, c);
  return make_result(1, 1, {v}, "pick", {&a}, [index](detail::GradFn& n, std::span<const double> g) {
    detail::accumulate(input(n, 0), index, g[0]);
  });
}

Tensor cosine(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) throw NumericsError("cosine: length mismatch");
  auto x = a.data(), y = b.data();
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  nx = std::sqrt(nx);
  ny = std::sqrt(ny);
  constexpr double kTiny = 1e-12;
  const bool degenerate = nx < kTiny || ny < kTiny;
  const double s = degenerate ? 0.0 : std::clamp(dot / (nx * ny), -1.0, 1.0);
  const double sv = degenerate ? 0.0 : dot / (nx * ny);
  return make_result(1, 1, {s}, "cosine", {&a, &b},
                     [degenerate, nx, ny, sv](detail::GradFn& n, std::span<const double> g) {
                       if (degenerate) return;
                       Impl& A = input(n, 0);
                       Impl& B = input(n, 1);
                       const std::size_t len = A.data.size();
                       if (A.requires_grad) {
                         std::vector<double> ga(len);
                         for (std::size_t i = 0; i < len; ++i)
                           ga[i] = g[0] * (B.data[i] / (nx * ny) - sv * A.data[i] / (nx * nx));
                         detail::accumulate(A, ga);
                       }
                       if (B.requires_grad) {
                         std::vector<double> gb(len);
                         for (std::size_t i = 0; i < len; ++i)
                           gb[i] = g[0] * (A.data[i] / (nx * ny) - sv * B.data[i] / (ny * ny));
                         detail::accumulate(B, gb);
                       }
                     });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  const std::size_t r = logits.rows(), c = logits.cols();
  if (targets.size() != r) throw NumericsError("cross_entropy: one target per row required");
  auto x = logits.data();
  auto probs = std::make_shared<std::vector<double>>(r * c);
  softmax_rows_into(x, r, c, false, *probs);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < r; ++i) {
    if (targets[i] == kIgnoreTarget) continue;
    if (targets[i] >= c) throw NumericsError("cross_entropy: target out of range");
    const double* xr = x.data() + i * c;
    double mx = *std::max_element(xr, xr + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(xr[j] - mx);
    total += mx + std::log(z) - xr[targets[i]];
    ++count;
  }
  if (count == 0) throw NumericsError("cross_entropy: no targets");
  std::vector<std::size_t> saved(targets.begin(), targets.end());
  const double denom = static_cast<double>(count);
  return make_result(1, 1, {total / denom}, "cross_entropy", {&logits},
                     [r, c, probs, saved, denom](detail::GradFn& n, std::span<const double> g) {
                       std::vector<double> gl(r * c, 0.0);
                       for (std::size_t i = 0; i < r; ++i) {
                         if (saved[i] == kIgnoreTarget) continue;
                         for (std::size_t j = 0; j < c; ++j) gl[i * c + j] = g[0] * (*probs)[i * c + j] / denom;
                         gl[i * c + saved[i]] -= g[0] / denom;
                       }
                       detail::accumulate(input(n, 0), gl);
                     });
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads, bool causal) {
  if (heads == 0) throw NumericsError("attention: heads must be positive");
  const std::size_t n = q.rows(), m = k.rows();
  if (q.cols() != k.cols() || v.rows() != m || q.cols() % heads != 0 || v.cols() % heads != 0) {
    throw NumericsError("attention: shape mismatch q" + shape_string(q.shape()) + " k" +
                        shape_string(k.shape()) + " v" + shape_string(v.shape()));
  }
  const std::size_t dk = q.cols() / heads, dv = v.cols() / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dk));
  CMap Q = view(q), K = view(k), V = view(v);
  std::vector<double> out(n * heads * dv);
  MMap O(out.data(), n, heads * dv);
  auto probs = std::make_shared<std::vector<RowMat>>(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    RowMat scores = (Q.middleCols(h * dk, dk) * K.middleCols(h * dk, dk).transpose()) * scale_factor;
    RowMat p(n, m);
    softmax_rows_into(std::span<const double>(scores.data(), n * m), n, m, causal,
                      std::span<double>(p.data(), n * m));
    O.middleCols(h * dv, dv).noalias() = p * V.middleCols(h * dv, dv);
    (*probs)[h] = std::move(p);
  }
  return make_result(
      n, heads * dv, std::move(out), causal ? "multi_head_attention_causal" : "multi_head_attention",
      {&q, &k, &v},
      [n, m, heads, dk, dv, scale_factor, probs](detail::GradFn& node, std::span<const double> g) {
        Impl& QI = input(node, 0);
        Impl& KI = input(node, 1);
        Impl& VI = input(node, 2);
        CMap Qm = view(QI.data, n, heads * dk);
        CMap Km = view(KI.data, m, heads * dk);
        CMap Vm = view(VI.data, m, heads * dv);
        CMap G = view(g, n, heads * dv);
        RowMat gq = RowMat::Zero(n, heads * dk), gk = RowMat::Zero(m, heads * dk), gv = RowMat::Zero(m, heads * dv);
        for (std::size_t h = 0; h < heads; ++h) {
          const RowMat& P = (*probs)[h];
          auto Gh = G.middleCols(h * dv, dv);
          gv.middleCols(h * dv, dv).noalias() = P.transpose() * Gh;
          RowMat dP = Gh * Vm.middleCols(h * dv, dv).transpose();
          Eigen::VectorXd rowdot = (dP.array() * P.array()).rowwise().sum();
          RowMat dS = P.array() * (dP.colwise() - rowdot).array();
          dS *= scale_factor;
          gq.middleCols(h * dk, dk).noalias() = dS * Km.middleCols(h * dk, dk);
          gk.middleCols(h * dk, dk).noalias() = dS.transpose() * Qm.middleCols(h * dk, dk);
        }
        if (QI.requires_grad) accumulate_matrix(QI, gq);
        if (KI.requires_grad) accumulate_matrix(KI, gk);
        if (VI.requires_grad) accumulate_matrix(VI, gv);
      });
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols() == 0) throw NumericsError("attention: d_k must be positive");
  return multi_head_attention(q, k, v, 1, false);
}

std::vector<Tensor> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads, bool causal) {
  if (heads == 0 || q.cols() != k.cols() || q.cols() % heads != 0) {
    throw NumericsError("attention_weights: shape mismatch");
  }
  const std::size_t n = q.rows(), m = k.rows(), dk = q.cols() / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dk));
  CMap Q = view(q), K = view(k);
  std::vector<Tensor> result;
  for (std::size_t h = 0; h < heads; ++h) {
    RowMat scores = (Q.middleCols(h * dk, dk) * K.middleCols(h * dk, dk).transpose()) * scale_factor;
    std::vector<double> p(n * m);
    softmax_rows_into(std::span<const double>(scores.data(), n * m), n, m, causal, p);
    result.push_back(Tensor::matrix(n, m, std::move(p)));
  }
  return result;
}

}  // namespace claimforge::numerics

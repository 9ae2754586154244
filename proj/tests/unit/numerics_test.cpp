#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/ops.hpp"
#include "claimforge/numerics/rng.hpp"
#include "support/gradcheck.hpp"

namespace nx = claimforge::numerics;
using nx::Tensor;

namespace {

// Loop-based attention used as an independent oracle.
std::vector<double> brute_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  const std::size_t n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
  std::vector<double> out(n * dv, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(m);
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0;
      for (std::size_t t = 0; t < d; ++t) acc += q.at(i, t) * k.at(j, t);
      s[j] = acc / std::sqrt(static_cast<double>(d));
    }
    double mx = *std::max_element(s.begin(), s.end()), z = 0;
    for (auto& x : s) z += (x = std::exp(x - mx));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < dv; ++t) out[i * dv + t] += s[j] / z * v.at(j, t);
  }
  return out;
}

}  // namespace

TEST(Tensor, RejectsBadConstruction) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), nx::NumericsError);
  EXPECT_THROW(Tensor({0, 2}, {}), nx::NumericsError);
  EXPECT_THROW(Tensor({1, 1}, {NAN}), nx::NumericsError);
  EXPECT_THROW(Tensor({1}, {INFINITY}), nx::NumericsError);
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  ASSERT_TRUE(t.has_grad());
  EXPECT_EQ(t.grad().size(), t.numel());
}

TEST(Softmax, Examples) {
  auto a = nx::softmax(std::vector<double>{0, 0});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  auto b = nx::softmax(std::vector<double>{1, 1, 1});
  for (double x : b) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
  auto c = nx::softmax(std::vector<double>{0, std::log(3.0)});
  EXPECT_NEAR(c[0], 0.25, 1e-15);
  EXPECT_NEAR(c[1], 0.75, 1e-15);
}

TEST(Softmax, Errors) {
  EXPECT_THROW(nx::softmax(std::vector<double>{}), nx::NumericsError);
  EXPECT_THROW(nx::softmax(std::vector<double>{1.0, NAN}), nx::NumericsError);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  nx::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.below(20));
    for (auto& x : v) x = rng.uniform(-1e4, 1e4);
    auto p = nx::softmax(v);
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += 123.0;
    auto q = nx::softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
  Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  auto cols = nx::softmax(m, 0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(cols.at(0, j) + cols.at(1, j), 1.0, 1e-12);
}

TEST(Attention, SingleKeyReturnsValue) {
  Tensor q({1, 3}, {0.3, -1, 2}), k({1, 3}, {5, 1, -2}), v({1, 2}, {7, -8});
  auto out = nx::scaled_dot_attention(q, k, v);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 7);
  EXPECT_DOUBLE_EQ(out.at(0, 1), -8);
}

TEST(Attention, IdenticalKeysGiveColumnMean) {
  Tensor q({2, 2}, {1, 2, -3, 0.5}), k({3, 2}, {1, 1, 1, 1, 1, 1}), v({3, 2}, {1, 2, 3, 4, 5, 9});
  auto out = nx::scaled_dot_attention(q, k, v);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(out.at(i, 0), 3.0, 1e-12);
    EXPECT_NEAR(out.at(i, 1), 5.0, 1e-12);
  }
}

TEST(Attention, MatchesBruteForceOracle) {
  nx::Rng rng(0);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 1 + rng.below(4), m = 1 + rng.below(4), d = 2 + rng.below(3);
    auto q = nx::normal_tensor({n, d}, 1.0, rng), k = nx::normal_tensor({m, d}, 1.0, rng),
         v = nx::normal_tensor({m, 3}, 1.0, rng);
    auto out = nx::scaled_dot_attention(q, k, v);
    auto expect = brute_attention(q, k, v);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(out.data()[i], expect[i], 1e-12);
  }
}

TEST(Attention, ShapeMismatch) {
  EXPECT_THROW(nx::scaled_dot_attention(Tensor::zeros({2, 3}), Tensor::zeros({2, 4}), Tensor::zeros({2, 1})),
               nx::NumericsError);
  EXPECT_THROW(nx::scaled_dot_attention(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}), Tensor::zeros({3, 1})),
               nx::NumericsError);
}

TEST(Attention, RowsAreStochastic) {
  nx::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t heads = 1 + rng.below(4), n = 1 + rng.below(6);
    auto q = nx::normal_tensor({n, heads * 4}, 3.0, rng);
    auto k = nx::normal_tensor({n + 2, heads * 4}, 3.0, rng);
    for (bool causal : {false, true}) {
      for (const auto& w : nx::attention_weights(q, k, heads, causal)) {
        for (std::size_t i = 0; i < w.rows(); ++i) {
          double total = 0;
          for (std::size_t j = 0; j < w.cols(); ++j) total += w.at(i, j);
          EXPECT_NEAR(total, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(Backward, SigmoidAtZero) {
  Tensor x = Tensor::scalar(0.0, true);
  nx::backward(nx::sigmoid(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.25);
}

TEST(Backward, SumOfSoftmaxHasZeroGradient) {
  Tensor v({1, 4}, {0.3, -2.0, 1.5, 4.0}, true);
  nx::backward(nx::sum(nx::softmax_rows(v)));
  for (double g : v.grad()) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Backward, ThreeLayerCompositeMatchesFiniteDifferences) {
  nx::Rng rng(0);
  auto x = nx::normal_tensor({3, 4}, 1.0, rng);
  auto w1 = nx::normal_tensor({5, 4}, 0.5, rng, true), b1 = nx::normal_tensor({1, 5}, 0.1, rng, true);
  auto w2 = nx::normal_tensor({5, 5}, 0.5, rng, true), b2 = nx::normal_tensor({1, 5}, 0.1, rng, true);
  auto w3 = nx::normal_tensor({2, 5}, 0.5, rng, true);
  std::vector<std::size_t> targets{0, 1, 1};
  auto forward = [&] {
    auto h = nx::tanh(nx::linear(x, w1, b1));
    h = nx::gelu(nx::linear(h, w2, b2));
    return nx::cross_entropy(nx::linear(h, w3, Tensor()), targets);
  };
  nx::backward(forward());
  for (Tensor p : {w1, b1, w2, b2, w3}) {
    std::vector<double> numeric(p.numel());
    for (std::size_t i = 0; i < p.numel(); ++i) {
      nx::NoGradGuard guard;
      double s = p.data()[i];
      p.mutable_data()[i] = s + 1e-5;
      double fp = forward().item();
      p.mutable_data()[i] = s - 1e-5;
      double fm = forward().item();
      p.mutable_data()[i] = s;
      numeric[i] = (fp - fm) / 2e-5;
    }
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += std::pow(p.grad()[i] - numeric[i], 2);
      norm += numeric[i] * numeric[i];
    }
    EXPECT_LT(std::sqrt(diff) / std::max(std::sqrt(norm), 1e-6), 1e-4);
  }
}

TEST(Backward, Errors) {
  Tensor v({1, 3}, {1, 2, 3}, true);
  EXPECT_THROW(nx::backward(nx::scale(v, 2.0)), nx::NumericsError);
  // A listed parameter the loss never touches gets a zero gradient.
  Tensor unused({2, 2}, {1, 2, 3, 4}, true);
  std::vector<Tensor> params{v, unused};
  auto grads = nx::backward(nx::sum(v), params);
  ASSERT_TRUE(grads.count(unused.id()));
  for (double g : grads.at(unused.id()).data()) EXPECT_EQ(g, 0.0);
  for (double g : grads.at(v.id()).data()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SharedSubexpressionVisitedOnce) {
  Tensor x = Tensor::scalar(1.5, true);
  auto y = nx::mul(x, x);          // x^2
  auto z = nx::add(y, nx::mul(y, x));  // x^2 + x^3
  nx::backward(z);
  EXPECT_NEAR(x.grad()[0], 2 * 1.5 + 3 * 1.5 * 1.5, 1e-12);
}

TEST(Backward, NoGradGuardSkipsRecording) {
  Tensor x = Tensor::scalar(1.0, true);
  nx::NoGradGuard guard;
  EXPECT_FALSE(nx::sigmoid(x).requires_grad());
}

class GradientSuite : public ::testing::TestWithParam<std::string_view> {};

TEST_P(GradientSuite, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    nx::Rng rng = nx::Rng(seed).substream(GetParam());
    auto gc = claimforge::testing::make_grad_case(GetParam(), rng);
    double err = claimforge::testing::gradient_check_error(gc, rng);
    EXPECT_LT(err, 1e-4) << GetParam() << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradientSuite, ::testing::ValuesIn(nx::registered_ops().begin(), nx::registered_ops().end()),
                         [](const auto& info) { return std::string(info.param); });

TEST(Rng, DeterministicAndStreamsIndependent) {
  nx::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  nx::Rng base(42);
  auto s1 = base.substream("init");
  base.next_u64();
  auto s2 = base.substream("init");
  EXPECT_EQ(s1.next_u64(), s2.next_u64());
  EXPECT_NE(nx::Rng(42).substream("init").next_u64(), nx::Rng(42).substream("corpus").next_u64());
  nx::Rng r(1);
  double total = 0;
  for (int i = 0; i < 20000; ++i) total += r.normal();
  EXPECT_NEAR(total / 20000, 0.0, 0.05);
}

TEST(Determinism, IdenticalSeedsGiveBitIdenticalOutputs) {
  auto run = [] {
    nx::Rng rng(11);
    auto q = nx::normal_tensor({5, 8}, 1.0, rng), k = nx::normal_tensor({7, 8}, 1.0, rng),
         v = nx::normal_tensor({7, 8}, 1.0, rng);
    return nx::multi_head_attention(q, k, v, 2).to_vector();
  };
  EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTripAtFloatPrecision) {
  auto path = std::filesystem::temp_directory_path() / "claimforge_ckpt_test.bin";
  nx::Checkpoint ck;
  nx::Rng rng(5);
  ck.tensors.emplace("layer0/w", nx::normal_tensor({3, 4}, 1.0, rng));
  ck.tensors.emplace("bias", Tensor({4}, {1, 2, 3, 4}));
  ck.meta["model_dim"] = "4";
  nx::save_checkpoint(path, ck);
  auto loaded = nx::load_checkpoint(path);
  EXPECT_EQ(loaded.meta.at("model_dim"), "4");
  ASSERT_EQ(loaded.tensors.size(), 2u);
  const auto& w = loaded.at("layer0/w");
  EXPECT_EQ(w.shape(), (nx::Shape{3, 4}));
  for (std::size_t i = 0; i < w.numel(); ++i)
    EXPECT_EQ(w.data()[i], static_cast<double>(static_cast<float>(ck.at("layer0/w").data()[i])));
  EXPECT_THROW(loaded.at("missing"), nx::CheckpointError);

  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::getline(in, magic);
  EXPECT_EQ(magic, "CFKP1");
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsBadMagic) {
  auto path = std::filesystem::temp_directory_path() / "claimforge_bad_ckpt.bin";
  {
    std::ofstream out(path);
    out << "NOPE\n";
  }
  EXPECT_THROW(nx::load_checkpoint(path), nx::CheckpointError);
  std::filesystem::remove(path);
}

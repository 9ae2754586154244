#include <cmath>

#include <gtest/gtest.h>

#include "claimforge/evaluator/train_evaluator.hpp"
#include "claimforge/numerics/ops.hpp"

namespace ev = claimforge::evaluator;
namespace nx = claimforge::numerics;
namespace tc = claimforge::textcore;
using nx::Tensor;

namespace {

constexpr std::size_t kDim = 32;
constexpr std::size_t kVocab = 50;

tc::EncoderConfig small_config() {
  tc::EncoderConfig cfg;
  cfg.model_dim = kDim;
  cfg.num_heads = 4;
  cfg.head_dim = 8;
  cfg.num_layers = 1;
  cfg.max_seq_len = 64;
  return cfg;
}

const tc::TokenIds kRef{11, 12, 13, 14, 15, 16};
const tc::TokenIds kGen{11, 12, 30, 14, 16};

void randomize_scores(ev::AspectHeads& h, nx::Rng& rng) {
  for (auto& v : h.score_weights.mutable_data()) v = rng.normal();
  for (auto& v : h.score_bias.mutable_data()) v = rng.normal() * 0.1;
}

// Per-aspect loop: softmax(e_k·h_t / sqrt(d)) weighted sum, then sigmoid.
std::vector<double> oracle_scores(const Tensor& hs, const ev::AspectHeads& heads) {
  std::vector<double> out;
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<double> w(hs.rows());
    double mx = -1e300;
    for (std::size_t t = 0; t < hs.rows(); ++t) {
      double dot = 0;
      for (std::size_t j = 0; j < hs.cols(); ++j) dot += heads.queries.at(k, j) * hs.at(t, j);
      w[t] = dot / std::sqrt(static_cast<double>(hs.cols()));
      mx = std::max(mx, w[t]);
    }
    double z = 0;
    for (auto& x : w) z += (x = std::exp(x - mx));
    double logit = heads.score_bias.data()[k];
    for (std::size_t j = 0; j < hs.cols(); ++j) {
      double hk = 0;
      for (std::size_t t = 0; t < hs.rows(); ++t) hk += w[t] / z * hs.at(t, j);
      logit += heads.score_weights.at(k, j) * hk;
    }
    out.push_back(1.0 / (1.0 + std::exp(-logit)));
  }
  return out;
}

}  // namespace

TEST(EncodePair, LayoutAndErrors) {
  nx::Rng rng(0);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  try {
    ev::encode_pair({}, {}, model.encoder);
    FAIL();
  } catch (const ev::EvaluatorError& e) {
    EXPECT_STREQ(e.what(), "empty claim pair");
  }
  auto h = ev::encode_pair(kRef, kGen, model.encoder);
  tc::TokenIds manual{2, 11, 12, 13, 14, 15, 16, 4, 11, 12, 30, 14, 16, 3};
  EXPECT_EQ(ev::pair_sequence(kRef, kGen), manual);
  EXPECT_EQ(h.to_vector(), tc::encode_sequence(manual, model.encoder).to_vector());
  EXPECT_NE(ev::encode_pair(kGen, kRef, model.encoder).to_vector(), h.to_vector());
  tc::TokenIds long_ref(40, 9), long_gen(30, 8);
  try {
    ev::encode_pair(long_ref, long_gen, model.encoder);
    FAIL();
  } catch (const ev::EvaluatorError& e) {
    EXPECT_NE(std::string(e.what()).find("truncate to 31 + 30"), std::string::npos) << e.what();
  }
  auto [r, g] = ev::fit_pair(long_ref, long_gen, 64);
  EXPECT_EQ(r.size() + g.size() + 3, 64u);
}

TEST(AspectScores, ZeroProjectionGivesHalf) {
  nx::Rng rng(0);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  auto out = ev::aspect_scores(ev::encode_pair(kRef, kGen, model.encoder), model.heads);
  for (double s : out.scores.data()) EXPECT_EQ(s, 0.5);
}

TEST(AspectScores, QueriesStartOrthonormal) {
  nx::Rng rng(0);
  auto heads = ev::AspectHeads::init(kDim, rng);
  auto gram = nx::matmul_nt(heads.queries, heads.queries);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(gram.at(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(AspectScores, SinglePositionAndOracle) {
  nx::Rng rng(0);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  randomize_scores(model.heads, rng);
  Tensor one = nx::normal_tensor({1, kDim}, 1.0, rng);
  auto single = ev::aspect_scores(one, model.heads);
  for (std::size_t k = 0; k < 5; ++k) {
    double logit = model.heads.score_bias.data()[k];
    for (std::size_t j = 0; j < kDim; ++j) logit += model.heads.score_weights.at(k, j) * one.at(0, j);
    EXPECT_NEAR(single.scores.data()[k], 1.0 / (1.0 + std::exp(-logit)), 1e-14);
    EXPECT_EQ(single.attention.at(k, 0), 1.0);
  }
  auto hs = ev::encode_pair(kRef, kGen, model.encoder);
  auto out = ev::aspect_scores(hs, model.heads);
  auto expect = oracle_scores(hs, model.heads);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(out.scores.data()[k], expect[k], 1e-10);
  for (std::size_t k = 0; k < 5; ++k) {
    double s = 0;
    for (std::size_t t = 0; t < hs.rows(); ++t) s += out.attention.at(k, t);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(OverallScore, Examples) {
  auto [o1, w1] = ev::overall_score(Tensor::full({1, 5}, 0.5), Tensor::zeros({1, 5}));
  EXPECT_EQ(o1.item(), 0.5);
  Tensor s = Tensor::row({0.9, 0.8, 0.7, 0.6, 0.5});
  auto [o2, w2] = ev::overall_score(s, Tensor::row({-1e3, 0, -1e3, -1e3, -1e3}));
  EXPECT_EQ(w2.data()[1], 1.0);
  EXPECT_EQ(o2.item(), 0.8);
  auto [o3, w3] = ev::overall_score(s, Tensor::zeros({1, 5}));
  EXPECT_NEAR(o3.item(), 0.70, 1e-15);
  nx::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    Tensor sc = nx::uniform_tensor({1, 5}, 0.5, rng);
    sc = nx::add_scalar(sc, 0.5);
    auto [o, w] = ev::overall_score(sc, nx::normal_tensor({1, 5}, 2.0, rng));
    auto v = sc.to_vector();
    EXPECT_GT(o.item(), *std::min_element(v.begin(), v.end()));
    EXPECT_LT(o.item(), *std::max_element(v.begin(), v.end()));
  }
}

TEST(AdaptiveMargin, ZeroProjectionAndBounds) {
  nx::Rng rng(0);
  auto heads = ev::AspectHeads::init(kDim, rng);
  auto adapter = ev::MarginAdapter::init(rng);
  EXPECT_EQ(heads.base_margin[0], 0.3);
  EXPECT_EQ(heads.strength[0], 0.1);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(5);
    double z = 0;
    for (auto& x : a) z += (x = rng.uniform());
    for (auto& x : a) x /= z;
    for (auto& v : adapter.projection.mutable_data()) v = rng.normal() * 5;
    for (std::size_t k = 0; k < 5; ++k) {
      double m = ev::adaptive_margin(k, Tensor::row(a), heads, adapter);
      ASSERT_LE(std::abs(m - heads.base_margin[k]), heads.strength[k] + 1e-15);
    }
  }
  std::fill(adapter.projection.mutable_data().begin(), adapter.projection.mutable_data().end(), 0.0);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(ev::adaptive_margin(k, Tensor::row({0.2, 0.2, 0.2, 0.2, 0.2}), heads, adapter), 0.3);
  }
}

TEST(QualityReport, Invariants) {
  nx::Rng rng(2);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  randomize_scores(model.heads, rng);
  for (auto& v : model.heads.weight_logits.mutable_data()) v = rng.normal();
  std::vector<double> alpha{0.1, 0.6, 0.1, 0.1, 0.1};
  auto r = ev::evaluate_pair(kRef, kGen, model, alpha);
  double expect = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    expect += r.aspect_weights[k] * r.aspect_scores[k];
    EXPECT_GT(r.aspect_scores[k], 0.0);
    EXPECT_LT(r.aspect_scores[k], 1.0);
    EXPECT_EQ(r.display_scores[k], 10 * r.aspect_scores[k]);
    EXPECT_LE(std::abs(r.margins[k] - 0.3), 0.1);
  }
  EXPECT_NEAR(r.overall, expect, 1e-10);
  EXPECT_EQ(r.domain_mixture[1], 0.6);
  auto json = ev::to_json(r);
  EXPECT_NE(json.find("\"terminology\""), std::string::npos);
}

TEST(QualityReport, UnifiedCoupling) {
  nx::Rng rng(3);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  randomize_scores(model.heads, rng);
  auto before = ev::evaluate_pair(kRef, kGen, model);
  model.encoder.layers[0].ln1_gain.mutable_data()[0] += 0.5;
  auto after = ev::evaluate_pair(kRef, kGen, model);
  int changed = 0;
  for (std::size_t k = 0; k < 5; ++k) changed += before.aspect_scores[k] != after.aspect_scores[k];
  EXPECT_GE(changed, 2);
}

TEST(TrainEvaluator, ZeroStepLossEqualsMargins) {
  nx::Rng rng(0);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  ev::RankedTuple t{"t", kRef, kRef, kGen, 3};
  double margins = 0;
  for (std::size_t k = 0; k < 5; ++k) margins += ev::adaptive_margin(k, Tensor::row({0, 0, 0, 1, 0}), model.heads, model.margin);
  EXPECT_NEAR(ev::tuple_loss(t, model).item(), margins, 1e-15);
}

TEST(TrainEvaluator, OverfitFourTuples) {
  nx::Rng rng(0);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  std::vector<ev::RankedTuple> tuples;
  for (int i = 0; i < 4; ++i) {
    tc::TokenIds ref;
    for (int t = 0; t < 8; ++t) ref.push_back(5 + rng.below(kVocab - 5));
    tc::TokenIds worse(ref.begin(), ref.begin() + 4);
    std::reverse(worse.begin(), worse.end());
    tuples.push_back({"t" + std::to_string(i), ref, ref, worse, static_cast<std::size_t>(i)});
  }
  tuples.push_back({"same", kRef, kGen, kGen, 0});
  double initial = 0;
  for (int i = 0; i < 4; ++i) initial += ev::tuple_loss(tuples[i], model).item() / 4;
  ev::EvaluatorTrainConfig cfg;
  cfg.steps = 100;
  cfg.lr = 1e-3;
  ev::train_evaluator(tuples, model, cfg);
  double final_loss = 0;
  for (int i = 0; i < 4; ++i) final_loss += ev::tuple_loss(tuples[i], model).item() / 4;
  EXPECT_LT(final_loss, initial);
  EXPECT_EQ(ev::ordering_accuracy({tuples.begin(), tuples.begin() + 4}, model), 1.0);
  EXPECT_THROW(ev::train_evaluator({tuples[4]}, model, cfg), claimforge::training::TrainingError);
}

TEST(Evaluator, CheckpointRoundTrip) {
  nx::Rng rng(4);
  auto model = ev::EvaluatorModel::init(small_config(), kVocab, rng);
  nx::Checkpoint ck;
  model.export_to(ck);
  auto back = ev::EvaluatorModel::import_from(ck, small_config());
  EXPECT_EQ(ev::evaluate_pair(kRef, kGen, back).overall, ev::evaluate_pair(kRef, kGen, model).overall);
  auto other = small_config();
  other.model_dim = 16;
  other.head_dim = 4;
  EXPECT_THROW(ev::EvaluatorModel::import_from(ck, other), std::exception);
}

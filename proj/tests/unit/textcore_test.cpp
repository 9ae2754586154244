#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "claimforge/numerics/ops.hpp"
#include "claimforge/textcore/encoder.hpp"
#include "claimforge/textcore/tokenizer.hpp"
#include "claimforge/textcore/vocabulary.hpp"

namespace nx = claimforge::numerics;
namespace tc = claimforge::textcore;
using nx::Tensor;

namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(CLAIMFORGE_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Counts tokens with a single pass over characters: each punctuation byte is one
// token, each maximal run of other non-space bytes is one token.
std::size_t scan_token_count(const std::string& text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (c < 128 && std::ispunct(c)) {
      ++count;
      in_word = false;
    } else if (!in_word) {
      ++count;
      in_word = true;
    }
  }
  return count;
}

using Mat = std::vector<std::vector<double>>;


Mat affine(const Mat& x, const Tensor& w, const Tensor& b) {
  Mat y(x.size(), std::vector<double>(w.rows()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double acc = b.data()[o];
      for (std::size_t k = 0; k < w.cols(); ++k) acc += x[i][k] * w.at(o, k);
      y[i][o] = acc;
    }
  return y;
}

Mat norm(const Mat& x, const Tensor& g, const Tensor& b) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mu = 0, var = 0;
    for (double v : x[i]) mu += v;
    mu /= x[i].size();
    for (double v : x[i]) var += (v - mu) * (v - mu);
    var /= x[i].size();
    for (std::size_t j = 0; j < x[i].size(); ++j) y[i][j] = (x[i][j] - mu) / std::sqrt(var + 1e-5) * g.data()[j] + b.data()[j];
  }
  return y;
}

// Loop-based forward pass of the encoder, independent of the tensor ops.
Mat brute_encode(const std::vector<std::size_t>& ids, const tc::EncoderParams& p) {
  const std::size_t d = p.config.model_dim, H = p.config.num_heads, dk = p.config.head_dim;
  Mat x(ids.size(), std::vector<double>(d));
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t j = 0; j < d; ++j) {
      double angle = t / std::pow(10000.0, (j - j % 2) / static_cast<double>(d));
      x[t][j] = p.token_embedding.at(ids[t], j) + (j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  for (const auto& l : p.layers) {
    Mat h = norm(x, l.ln1_gain, l.ln1_bias);
    Mat q = affine(h, l.wq, l.bq), k = affine(h, l.wk, l.bk), v = affine(h, l.wv, l.bv);
    Mat a(ids.size(), std::vector<double>(d, 0.0));
    for (std::size_t hd = 0; hd < H; ++hd)
      for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<double> s(ids.size());
        double mx = -1e300;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          double acc = 0;
          for (std::size_t c = 0; c < dk; ++c) acc += q[i][hd * dk + c] * k[j][hd * dk + c];
          s[j] = acc / std::sqrt(static_cast<double>(dk));
          mx = std::max(mx, s[j]);
        }
        double z = 0;
        for (auto& e : s) z += (e = std::exp(e - mx));
        for (std::size_t j = 0; j < ids.size(); ++j)
          for (std::size_t c = 0; c < dk; ++c) a[i][hd * dk + c] += s[j] / z * v[j][hd * dk + c];
      }
    Mat o = affine(a, l.wo, l.bo);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) x[i][j] += o[i][j];
    Mat f = affine(norm(x, l.ln2_gain, l.ln2_bias), l.w1, l.b1);
    for (auto& row : f)
      for (auto& e : row) e = 0.5 * e * (1 + std::tanh(std::sqrt(2 / M_PI) * (e + 0.044715 * e * e * e)));
    Mat f2 = affine(f, l.w2, l.b2);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) x[i][j] += f2[i][j];
  }
  return x;
}

tc::EncoderConfig small_config() {
  tc::EncoderConfig cfg;
  cfg.model_dim = 16;
  cfg.num_heads = 4;
  cfg.head_dim = 4;
  cfg.num_layers = 2;
  cfg.max_seq_len = 1024;
  return cfg;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_TRUE(tc::split_tokens("").empty());
  EXPECT_EQ(tc::split_tokens("A claim, comprising:"),
            (std::vector<std::string>{"a", "claim", ",", "comprising", ":"}));
  tc::Vocabulary vocab = tc::Vocabulary::from_tokens({"a", "claim", ",", "comprising", ":"});
  EXPECT_EQ(vocab.encode("A claim, comprising:"), (tc::TokenIds{5, 6, 7, 8, 9}));
  EXPECT_EQ(vocab.encode("A widget"), (tc::TokenIds{5, tc::Vocabulary::kUnk}));
}

TEST(Tokenize, MatchesCharacterScanOracle) {
  const std::string paragraph =
      "The rotor assembly, shown in FIG. 2, includes a hub; twelve blades (each of titanium) extend radially "
      "from the hub. A sensor-mounted bracket holds the controller at 45 degrees. Power is supplied by "
      "a 12-volt cell, which recharges whenever the rotor spins faster than 300 rpm!";
  EXPECT_EQ(tc::split_tokens(paragraph).size(), scan_token_count(paragraph));
  auto fixture = read_fixture("patent_fixture.txt");
  EXPECT_EQ(tc::split_tokens(fixture).size(), scan_token_count(fixture));
}

TEST(Tokenize, DetokenizeJoinsWithSingleSpaces) {
  auto toks = tc::split_tokens("Claim  1:\n  a   bolt.");
  EXPECT_EQ(tc::detokenize(toks), "claim 1 : a bolt .");
  EXPECT_EQ(tc::split_tokens(tc::detokenize(toks)), toks);
}

TEST(SentenceBoundaries, Examples) {
  EXPECT_EQ(tc::sentence_boundaries("One. Two."), (std::vector<std::size_t>{4, 9}));
  std::string plain = "no terminators here at all";
  EXPECT_EQ(tc::sentence_boundaries(plain), (std::vector<std::size_t>{plain.size()}));
  EXPECT_EQ(tc::sentence_boundaries("Summary\n1. A bolt.\n2. A nut."), (std::vector<std::size_t>{8, 19, 28}));
  EXPECT_EQ(tc::sentence_boundaries("Width is 3.5 mm. Done"), (std::vector<std::size_t>{16, 21}));
  EXPECT_EQ(tc::sentence_boundaries("Heading\n\nBody text"), (std::vector<std::size_t>{9, 18}));
}

TEST(SentenceBoundaries, HandAnnotatedFixture) {
  auto text = read_fixture("patent_fixture.txt");
  const std::vector<std::size_t> annotated{63, 123, 174, 218, 272, 312, 355, 419, 466, 512, 554, 583, 656, 724, 797};
  ASSERT_EQ(text.size(), 797u);
  EXPECT_EQ(tc::sentence_boundaries(text), annotated);
}

TEST(SentenceBoundaries, StrictlyIncreasingAndEndAtLength) {
  const std::string pieces[] = {"a", "b.", " ", "\n", "\n\n", "7.", "x;", "?", "3.1", "\n4. "};
  nx::Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = rng.below(30); i < n; ++i) text += pieces[rng.below(std::size(pieces))];
    auto b = tc::sentence_boundaries(text);
    ASSERT_FALSE(b.empty());
    EXPECT_EQ(b.back(), text.size());
    for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i - 1], b[i]);
  }
}

TEST(Vocabulary, ReservedIdsAndFrequencyOrder) {
  auto v = tc::Vocabulary::build({"the bolt the nut", "the bolt"}, 7);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(4), "<sep>");
  EXPECT_EQ(v.id("the"), 5u);
  EXPECT_EQ(v.id("bolt"), 6u);
  EXPECT_EQ(v.id("nut"), tc::Vocabulary::kUnk);
  EXPECT_THROW(v.token(99), tc::TextError);
}

TEST(Vocabulary, FileRoundTripAndIdRoundTrip) {
  auto v = tc::Vocabulary::build({"a gear engages a shaft ; the shaft rotates .", "wherein the gear is steel"});
  auto path = std::filesystem::temp_directory_path() / "claimforge_vocab_test.txt";
  v.save(path);
  auto w = tc::Vocabulary::load(path);
  ASSERT_EQ(w.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.token(i), w.token(i));
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(w.id(first), tc::Vocabulary::kReserved);
  std::filesystem::remove(path);

  nx::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    tc::TokenIds ids(1 + rng.below(12));
    for (auto& id : ids) id = tc::Vocabulary::kReserved + rng.below(v.size() - tc::Vocabulary::kReserved);
    EXPECT_EQ(v.encode(v.decode(ids)), ids);
  }
}

TEST(Encoder, ConfigValidation) {
  tc::EncoderConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.model_dim, 512u);
  EXPECT_EQ(cfg.num_heads, 8u);
  EXPECT_EQ(cfg.head_dim, 64u);
  cfg.head_dim = 32;
  EXPECT_THROW(cfg.validate(), tc::TextError);
}

TEST(Encoder, Errors) {
  nx::Rng rng(0);
  auto cfg = small_config();
  cfg.max_seq_len = 4;
  auto p = tc::EncoderParams::init(cfg, 10, rng);
  try {
    tc::encode_sequence(tc::TokenIds{}, p);
    FAIL();
  } catch (const tc::TextError& e) {
    EXPECT_STREQ(e.what(), "empty sequence");
  }
  EXPECT_THROW(tc::encode_sequence(tc::TokenIds{1, 2, 3, 4, 5}, p), tc::TextError);
  EXPECT_THROW(tc::encode_sequence(tc::TokenIds{10}, p), tc::TextError);
}

TEST(Encoder, ZeroWeightsGiveEmbeddingsPlusPositions) {
  nx::Rng rng(0);
  auto p = tc::EncoderParams::init(small_config(), 20, rng);
  for (auto& layer : p.layers)
    for (auto t : layer.parameters()) std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  tc::TokenIds ids{5, 9, 9, 17};
  auto out = tc::encode_sequence(ids, p);
  auto pos = tc::sinusoidal_positions(ids.size(), 16);
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t j = 0; j < 16; ++j)
      EXPECT_DOUBLE_EQ(out.at(t, j), p.token_embedding.at(ids[t], j) + pos.at(t, j));
}

TEST(Encoder, MatchesBruteForceOracle) {
  nx::Rng rng(0);
  auto p = tc::EncoderParams::init(small_config(), 30, rng);
  tc::TokenIds ids{5, 12, 7, 29, 3, 3, 18, 2};
  auto out = tc::encode_sequence(ids, p);
  auto expect = brute_encode(ids, p);
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(out.at(t, j), expect[t][j], 1e-10);
}

TEST(Encoder, PositionsMakeOrderMatter) {
  nx::Rng rng(1);
  auto p = tc::EncoderParams::init(small_config(), 30, rng);
  auto a = tc::encode_sequence(tc::TokenIds{5, 6, 7, 8}, p);
  auto b = tc::encode_sequence(tc::TokenIds{6, 5, 7, 8}, p);
  EXPECT_NE(a.to_vector(), b.to_vector());
}

TEST(Encoder, ShapeContract) {
  nx::Rng rng(2);
  auto p = tc::EncoderParams::init(small_config(), 40, rng);
  for (std::size_t len : {1u, 2u, 17u, 255u, 1024u}) {
    tc::TokenIds ids(len);
    for (auto& id : ids) id = rng.below(40);
    auto out = tc::encode_sequence(ids, p);
    EXPECT_EQ(out.rows(), len);
    EXPECT_EQ(out.cols(), 16u);
  }
}

TEST(Encoder, CheckpointRoundTripAndDimensionCheck) {
  nx::Rng rng(3);
  auto p = tc::EncoderParams::init(small_config(), 12, rng);
  nx::Checkpoint ck;
  p.export_to(ck, "enc/");
  auto q = tc::EncoderParams::import_from(ck, "enc/", small_config());
  EXPECT_EQ(q.parameters().size(), p.parameters().size());
  auto other = small_config();
  other.model_dim = 32;
  other.head_dim = 8;
  EXPECT_THROW(tc::EncoderParams::import_from(ck, "enc/", other), tc::TextError);
}

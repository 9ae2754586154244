#include "claimforge/textcore/encoder.hpp"

#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::textcore {

namespace nx = numerics;

void EncoderConfig::validate() const {
  if (model_dim == 0 || num_heads == 0 || head_dim == 0 || num_layers == 0 || max_seq_len == 0) {
    throw TextError("encoder config sizes must be positive");
  }
  if (num_heads * head_dim != model_dim) {
    throw TextError("encoder config: num_heads (" + std::to_string(num_heads) + ") x head_dim (" +
                    std::to_string(head_dim) + ") != model_dim (" + std::to_string(model_dim) + ")");
  }
}

TransformerLayer TransformerLayer::init(std::size_t d, std::size_t ffn, std::size_t num_layers, nx::Rng& rng) {
  const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
  const double s_out = s_in / std::sqrt(2.0 * static_cast<double>(num_layers));
  const double s_ffn = 1.0 / std::sqrt(static_cast<double>(ffn)) / std::sqrt(2.0 * static_cast<double>(num_layers));
  TransformerLayer l;
  l.ln1_gain = Tensor::full({1, d}, 1.0, true);
  l.ln1_bias = Tensor::zeros({1, d}, true);
  l.wq = nx::normal_tensor({d, d}, s_in, rng, true);
  l.bq = Tensor::zeros({1, d}, true);
  l.wk = nx::normal_tensor({d, d}, s_in, rng, true);
  l.bk = Tensor::zeros({1, d}, true);
  l.wv = nx::normal_tensor({d, d}, s_in, rng, true);
  l.bv = Tensor::zeros({1, d}, true);
  l.wo = nx::normal_tensor({d, d}, s_out, rng, true);
  l.bo = Tensor::zeros({1, d}, true);
  l.ln2_gain = Tensor::full({1, d}, 1.0, true);
  l.ln2_bias = Tensor::zeros({1, d}, true);
  l.w1 = nx::normal_tensor({ffn, d}, s_in, rng, true);
  l.b1 = Tensor::zeros({1, ffn}, true);
  l.w2 = nx::normal_tensor({d, ffn}, s_ffn, rng, true);
  l.b2 = Tensor::zeros({1, d}, true);
  return l;
}

std::vector<Tensor> TransformerLayer::parameters() const {
  return {ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo, ln2_gain, ln2_bias, w1, b1, w2, b2};
}

namespace {

const char* const kLayerNames[] = {"ln1_gain", "ln1_bias", "wq", "bq", "wk", "bk", "wv", "bv",
                                   "wo", "bo", "ln2_gain", "ln2_bias", "w1", "b1", "w2", "b2"};

Tensor trainable(const Tensor& t) { return Tensor(t.shape(), t.to_vector(), true); }

}  // namespace

void TransformerLayer::export_to(nx::Checkpoint& ck, const std::string& prefix) const {
  auto params = parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ck.tensors[prefix + kLayerNames[i]] = params[i];
}

TransformerLayer TransformerLayer::import_from(const nx::Checkpoint& ck, const std::string& prefix) {
  TransformerLayer l;
  Tensor* slots[] = {&l.ln1_gain, &l.ln1_bias, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv,
                     &l.wo, &l.bo, &l.ln2_gain, &l.ln2_bias, &l.w1, &l.b1, &l.w2, &l.b2};
  for (std::size_t i = 0; i < 16; ++i) *slots[i] = trainable(ck.at(prefix + kLayerNames[i]));
  return l;
}

Tensor transformer_layer(const Tensor& x, const TransformerLayer& l, std::size_t num_heads, bool causal,
                         const ProjectionOverride* override) {
  const Tensor& wq = override && override->wq.defined() ? override->wq : l.wq;
  const Tensor& wv = override && override->wv.defined() ? override->wv : l.wv;
  Tensor h = nx::layer_norm(x, l.ln1_gain, l.ln1_bias);
  Tensor q = nx::linear(h, wq, l.bq);
  Tensor k = nx::linear(h, l.wk, l.bk);
  Tensor v = nx::linear(h, wv, l.bv);
  Tensor attn = nx::linear(nx::multi_head_attention(q, k, v, num_heads, causal), l.wo, l.bo);
  Tensor y = nx::add(x, attn);
  Tensor f = nx::layer_norm(y, l.ln2_gain, l.ln2_bias);
  f = nx::linear(nx::gelu(nx::linear(f, l.w1, l.b1)), l.w2, l.b2);
  return nx::add(y, f);
}

Tensor sinusoidal_positions(std::size_t length, std::size_t dim, std::size_t start) {
  std::vector<double> data(length * dim);
  for (std::size_t p = 0; p < length; ++p) {
    const double pos = static_cast<double>(p + start);
    for (std::size_t i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
      data[p * dim + i] = std::sin(pos * freq);
      if (i + 1 < dim) data[p * dim + i + 1] = std::cos(pos * freq);
    }
  }
  return Tensor::matrix(length, dim, std::move(data));
}

EncoderParams EncoderParams::init(const EncoderConfig& config, std::size_t vocab_size, nx::Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.token_embedding = nx::normal_tensor({vocab_size, config.model_dim}, 1.0, rng, true);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    p.layers.push_back(TransformerLayer::init(config.model_dim, config.ffn_width(), config.num_layers, rng));
  }
  return p;
}

std::vector<Tensor> EncoderParams::parameters() const {
  std::vector<Tensor> out{token_embedding};
  for (const auto& l : layers) {
    auto lp = l.parameters();
    out.insert(out.end(), lp.begin(), lp.end());
  }
  return out;
}

void EncoderParams::export_to(nx::Checkpoint& ck, const std::string& prefix) const {
  ck.tensors[prefix + "token_embedding"] = token_embedding;
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].export_to(ck, prefix + "layer" + std::to_string(i) + "/");
}

EncoderParams EncoderParams::import_from(const nx::Checkpoint& ck, const std::string& prefix, const EncoderConfig& config) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.token_embedding = trainable(ck.at(prefix + "token_embedding"));
  if (p.token_embedding.cols() != config.model_dim) {
    throw TextError("checkpoint model_dim " + std::to_string(p.token_embedding.cols()) +
                    " does not match config model_dim " + std::to_string(config.model_dim));
  }
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    p.layers.push_back(TransformerLayer::import_from(ck, prefix + "layer" + std::to_string(i) + "/"));
    if (p.layers.back().w1.rows() != config.ffn_width()) {
      throw TextError("checkpoint ffn width " + std::to_string(p.layers.back().w1.rows()) +
                      " does not match config ffn width " + std::to_string(config.ffn_width()));
    }
  }
  return p;
}

Tensor embed_tokens(std::span<const std::size_t> ids, const Tensor& token_embedding, std::size_t max_seq_len) {
  if (ids.empty()) throw TextError("empty sequence");
  if (ids.size() > max_seq_len) {
    throw TextError("sequence of length " + std::to_string(ids.size()) + " exceeds max_seq_len " +
                    std::to_string(max_seq_len));
  }
  for (auto id : ids) {
    if (id >= token_embedding.rows()) {
      throw TextError("token id " + std::to_string(id) + " out of vocabulary range " +
                      std::to_string(token_embedding.rows()));
    }
  }
  return nx::add(nx::embedding(token_embedding, ids), sinusoidal_positions(ids.size(), token_embedding.cols()));
}

Tensor encode_sequence(std::span<const std::size_t> ids, const EncoderParams& params) {
  Tensor x = embed_tokens(ids, params.token_embedding, params.config.max_seq_len);
  for (const auto& layer : params.layers) x = transformer_layer(x, layer, params.config.num_heads, false);
  return x;
}

}  // namespace claimforge::textcore

#include "claimforge/generator/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::generator {

namespace nx = numerics;
namespace tc = textcore;

DecoderParams DecoderParams::init(const tc::EncoderConfig& config, std::size_t vocab_size, nx::Rng& rng) {
  auto base = tc::EncoderParams::init(config, vocab_size, rng);
  DecoderParams p;
  p.config = config;
  p.token_embedding = base.token_embedding;
  p.layers = std::move(base.layers);
  p.final_gain = Tensor::full({1, config.model_dim}, 1.0, true);
  p.final_bias = Tensor::zeros({1, config.model_dim}, true);
  p.lm_head = nx::normal_tensor({vocab_size, config.model_dim}, 1.0 / std::sqrt(static_cast<double>(config.model_dim)),
                                rng, true);
  return p;
}

std::vector<Tensor> DecoderParams::parameters() const {
  std::vector<Tensor> out{token_embedding};
  for (const auto& l : layers) {
    auto lp = l.parameters();
    out.insert(out.end(), lp.begin(), lp.end());
  }
  out.insert(out.end(), {final_gain, final_bias, lm_head});
  return out;
}

void DecoderParams::export_to(nx::Checkpoint& ck, const std::string& prefix) const {
  tc::EncoderParams base{config, token_embedding, layers};
  base.export_to(ck, prefix);
  ck.tensors[prefix + "final_gain"] = final_gain;
  ck.tensors[prefix + "final_bias"] = final_bias;
  ck.tensors[prefix + "lm_head"] = lm_head;
}

DecoderParams DecoderParams::import_from(const nx::Checkpoint& ck, const std::string& prefix,
                                         const tc::EncoderConfig& config) {
  auto base = tc::EncoderParams::import_from(ck, prefix, config);
  auto load = [&](const std::string& name) {
    const auto& t = ck.at(prefix + name);
    return Tensor(t.shape(), t.to_vector(), true);
  };
  DecoderParams p;
  p.config = config;
  p.token_embedding = base.token_embedding;
  p.layers = std::move(base.layers);
  p.final_gain = load("final_gain");
  p.final_bias = load("final_bias");
  p.lm_head = load("lm_head");
  return p;
}

GeneratorModel GeneratorModel::init(const tc::EncoderConfig& config, std::size_t vocab_size, nx::Rng& rng,
                                    std::size_t max_prefix_tokens) {
  nx::Rng dec_rng = rng.substream("decoder");
  nx::Rng bank_rng = rng.substream("adapters");
  nx::Rng cls_rng = rng.substream("classifier");
  GeneratorModel m;
  m.decoder = DecoderParams::init(config, vocab_size, dec_rng);
  m.bank = AdapterBank::init(config.num_layers, config.model_dim, bank_rng);
  m.classifier = DomainClassifier::init(config.model_dim, cls_rng);
  m.max_prefix_tokens = max_prefix_tokens;
  return m;
}

void GeneratorModel::export_to(nx::Checkpoint& ck) const {
  decoder.export_to(ck, "decoder/");
  bank.export_to(ck);
  classifier.export_to(ck, "classifier/");
  ck.meta["max_prefix_tokens"] = std::to_string(max_prefix_tokens);
}

GeneratorModel GeneratorModel::import_from(const nx::Checkpoint& ck, const tc::EncoderConfig& config) {
  GeneratorModel m;
  m.decoder = DecoderParams::import_from(ck, "decoder/", config);
  m.bank = AdapterBank::import_from(ck, config.num_layers);
  m.classifier = DomainClassifier::import_from(ck, "classifier/");
  if (auto it = ck.meta.find("max_prefix_tokens"); it != ck.meta.end()) m.max_prefix_tokens = std::stoul(it->second);
  return m;
}

std::vector<tc::ProjectionOverride> adapted_projections(const DecoderParams& decoder, const AdapterBank& bank,
                                                        const Tensor& alpha) {
  if (bank.num_layers != decoder.layers.size()) {
    throw GeneratorError("adapter bank has " + std::to_string(bank.num_layers) + " layers, decoder has " +
                         std::to_string(decoder.layers.size()));
  }
  std::vector<tc::ProjectionOverride> out;
  for (std::size_t l = 0; l < decoder.layers.size(); ++l) {
    out.push_back({effective_projection(decoder.layers[l].wq, bank, alpha, l, 'q'),
                   effective_projection(decoder.layers[l].wv, bank, alpha, l, 'v')});
  }
  return out;
}

TokenIds build_prompt(std::span<const std::size_t> description, std::size_t max_prefix) {
  TokenIds prompt{tc::Vocabulary::kBos};
  std::size_t n = std::min(description.size(), max_prefix);
  prompt.insert(prompt.end(), description.begin(), description.begin() + n);
  prompt.push_back(tc::Vocabulary::kSep);
  return prompt;
}

namespace {

Tensor embed_at(std::span<const std::size_t> ids, const DecoderParams& d, std::size_t start) {
  if (start + ids.size() > d.config.max_seq_len) {
    throw GeneratorError("sequence of length " + std::to_string(start + ids.size()) + " exceeds max_seq_len " +
                         std::to_string(d.config.max_seq_len));
  }
  for (auto id : ids) {
    if (id >= d.vocab_size()) throw GeneratorError("token id " + std::to_string(id) + " out of vocabulary range");
  }
  return nx::add(nx::embedding(d.token_embedding, ids),
                 tc::sinusoidal_positions(ids.size(), d.config.model_dim, start));
}

const tc::ProjectionOverride* override_for(const std::vector<tc::ProjectionOverride>& overrides, std::size_t l) {
  return overrides.empty() ? nullptr : &overrides[l];
}

}  // namespace

Tensor decoder_logits(std::span<const std::size_t> ids, const DecoderParams& decoder,
                      const std::vector<tc::ProjectionOverride>& overrides, std::size_t from) {
  if (ids.empty()) throw GeneratorError("empty sequence");
  if (from >= ids.size()) throw GeneratorError("logit range starts past the sequence end");
  if (!overrides.empty() && overrides.size() != decoder.layers.size()) {
    throw GeneratorError("one projection override per decoder layer required");
  }
  Tensor x = embed_at(ids, decoder, 0);
  for (std::size_t l = 0; l < decoder.layers.size(); ++l) {
    x = tc::transformer_layer(x, decoder.layers[l], decoder.config.num_heads, true, override_for(overrides, l));
  }
  if (from > 0) x = nx::slice_rows(x, from, ids.size());
  x = nx::layer_norm(x, decoder.final_gain, decoder.final_bias);
  return nx::linear(x, decoder.lm_head, Tensor());
}

DecoderCache::DecoderCache(const DecoderParams& decoder, std::vector<tc::ProjectionOverride> overrides)
    : decoder_(decoder), overrides_(std::move(overrides)), keys_(decoder.layers.size()), values_(decoder.layers.size()) {
  if (!overrides_.empty() && overrides_.size() != decoder.layers.size()) {
    throw GeneratorError("one projection override per decoder layer required");
  }
}

std::vector<double> DecoderCache::feed(std::span<const std::size_t> ids) {
  if (ids.empty()) throw GeneratorError("empty sequence");
  nx::NoGradGuard no_grad;
  Tensor x = embed_at(ids, decoder_, length_);
  for (std::size_t l = 0; l < decoder_.layers.size(); ++l) {
    const auto& layer = decoder_.layers[l];
    const auto* o = override_for(overrides_, l);
    const Tensor& wq = o && o->wq.defined() ? o->wq : layer.wq;
    const Tensor& wv = o && o->wv.defined() ? o->wv : layer.wv;
    Tensor h = nx::layer_norm(x, layer.ln1_gain, layer.ln1_bias);
    Tensor q = nx::linear(h, wq, layer.bq);
    Tensor k = nx::linear(h, layer.wk, layer.bk);
    Tensor v = nx::linear(h, wv, layer.bv);
    keys_[l] = keys_[l].defined() ? nx::concat_rows({keys_[l], k}) : k;
    values_[l] = values_[l].defined() ? nx::concat_rows({values_[l], v}) : v;
    Tensor attn = nx::multi_head_attention(q, keys_[l], values_[l], decoder_.config.num_heads, true);
    Tensor y = nx::add(x, nx::linear(attn, layer.wo, layer.bo));
    Tensor f = nx::layer_norm(y, layer.ln2_gain, layer.ln2_bias);
    x = nx::add(y, nx::linear(nx::gelu(nx::linear(f, layer.w1, layer.b1)), layer.w2, layer.b2));
  }
  length_ += ids.size();
  Tensor last = nx::slice_rows(x, x.rows() - 1, x.rows());
  return nx::linear(nx::layer_norm(last, decoder_.final_gain, decoder_.final_bias), decoder_.lm_head, Tensor())
      .to_vector();
}

}  // namespace claimforge::generator

#include "claimforge/evaluator/evaluator.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::evaluator {

namespace nx = numerics;
namespace tc = textcore;

namespace {

// Gram-Schmidt on Gaussian rows.
Tensor orthonormal_rows(std::size_t rows, std::size_t cols, nx::Rng& rng) {
  if (rows > cols) throw EvaluatorError("model_dim must be at least 5 for orthonormal aspect queries");
  std::vector<std::vector<double>> basis;
  while (basis.size() < rows) {
    std::vector<double> v(cols);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double dot = 0;
      for (std::size_t j = 0; j < cols; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < cols; ++j) v[j] -= dot * b[j];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> flat;
  for (const auto& b : basis) flat.insert(flat.end(), b.begin(), b.end());
  return Tensor::matrix(rows, cols, std::move(flat), true);
}

Tensor trainable(const Tensor& t) { return Tensor(t.shape(), t.to_vector(), true); }

}  // namespace

AspectHeads AspectHeads::init(std::size_t model_dim, nx::Rng& rng, double base_margin, double strength) {
  AspectHeads h;
  h.queries = orthonormal_rows(kNumAspects, model_dim, rng);
  h.score_weights = Tensor::zeros({kNumAspects, model_dim}, true);
  h.score_bias = Tensor::zeros({1, kNumAspects}, true);
  h.weight_logits = Tensor::zeros({1, kNumAspects}, true);
  h.base_margin.fill(base_margin);
  h.strength.fill(strength);
  return h;
}

std::vector<Tensor> AspectHeads::parameters() const { return {queries, score_weights, score_bias, weight_logits}; }

MarginAdapter MarginAdapter::init(nx::Rng& rng, std::size_t embed_dim) {
  MarginAdapter m;
  m.domain_embedding = nx::normal_tensor({kNumDomains, embed_dim}, 1.0, rng, true);
  m.projection = nx::normal_tensor({kNumAspects, embed_dim}, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng,
                                   true);
  m.bias = Tensor::zeros({1, kNumAspects}, true);
  return m;
}

std::vector<Tensor> MarginAdapter::parameters() const { return {domain_embedding, projection, bias}; }

EvaluatorModel EvaluatorModel::init(const tc::EncoderConfig& config, std::size_t vocab_size, nx::Rng& rng) {
  nx::Rng enc_rng = rng.substream("encoder");
  nx::Rng head_rng = rng.substream("aspect-heads");
  nx::Rng margin_rng = rng.substream("margins");
  return {tc::EncoderParams::init(config, vocab_size, enc_rng), AspectHeads::init(config.model_dim, head_rng),
          MarginAdapter::init(margin_rng)};
}

std::vector<Tensor> EvaluatorModel::parameters() const {
  auto out = encoder.parameters();
  for (const auto& t : heads.parameters()) out.push_back(t);
  for (const auto& t : margin.parameters()) out.push_back(t);
  return out;
}

void EvaluatorModel::export_to(nx::Checkpoint& ck) const {
  encoder.export_to(ck, "evaluator/encoder/");
  ck.tensors["evaluator/queries"] = heads.queries;
  ck.tensors["evaluator/score_weights"] = heads.score_weights;
  ck.tensors["evaluator/score_bias"] = heads.score_bias;
  ck.tensors["evaluator/weight_logits"] = heads.weight_logits;
  ck.tensors["evaluator/base_margin"] = Tensor::row({heads.base_margin.begin(), heads.base_margin.end()});
  ck.tensors["evaluator/strength"] = Tensor::row({heads.strength.begin(), heads.strength.end()});
  ck.tensors["evaluator/domain_embedding"] = margin.domain_embedding;
  ck.tensors["evaluator/margin_projection"] = margin.projection;
  ck.tensors["evaluator/margin_bias"] = margin.bias;
}

EvaluatorModel EvaluatorModel::import_from(const nx::Checkpoint& ck, const tc::EncoderConfig& config) {
  EvaluatorModel m;
  m.encoder = tc::EncoderParams::import_from(ck, "evaluator/encoder/", config);
  m.heads.queries = trainable(ck.at("evaluator/queries"));
  m.heads.score_weights = trainable(ck.at("evaluator/score_weights"));
  m.heads.score_bias = trainable(ck.at("evaluator/score_bias"));
  m.heads.weight_logits = trainable(ck.at("evaluator/weight_logits"));
  auto mu = ck.at("evaluator/base_margin").data();
  auto beta = ck.at("evaluator/strength").data();
  for (std::size_t k = 0; k < kNumAspects; ++k) {
    m.heads.base_margin[k] = mu[k];
    m.heads.strength[k] = beta[k];
  }
  m.margin.domain_embedding = trainable(ck.at("evaluator/domain_embedding"));
  m.margin.projection = trainable(ck.at("evaluator/margin_projection"));
  m.margin.bias = trainable(ck.at("evaluator/margin_bias"));
  if (m.heads.queries.cols() != config.model_dim) {
    throw EvaluatorError("checkpoint model_dim " + std::to_string(m.heads.queries.cols()) +
                         " does not match config model_dim " + std::to_string(config.model_dim));
  }
  return m;
}

TokenIds pair_sequence(std::span<const std::size_t> ref, std::span<const std::size_t> gen) {
  TokenIds ids{tc::Vocabulary::kBos};
  ids.insert(ids.end(), ref.begin(), ref.end());
  ids.push_back(tc::Vocabulary::kSep);
  ids.insert(ids.end(), gen.begin(), gen.end());
  ids.push_back(tc::Vocabulary::kEos);
  return ids;
}

std::pair<TokenIds, TokenIds> fit_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen,
                                       std::size_t max_seq_len) {
  if (max_seq_len < 5) throw EvaluatorError("max_seq_len too small for a claim pair");
  std::size_t budget = max_seq_len - 3, r = ref.size(), g = gen.size();
  while (r + g > budget) {
    if (r >= g) {
      --r;
    } else {
      --g;
    }
  }
  return {TokenIds(ref.begin(), ref.begin() + r), TokenIds(gen.begin(), gen.begin() + g)};
}

Tensor encode_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen, const tc::EncoderParams& encoder) {
  if (ref.empty() && gen.empty()) throw EvaluatorError("empty claim pair");
  const std::size_t limit = encoder.config.max_seq_len;
  if (ref.size() + gen.size() + 3 > limit) {
    auto [r, g] = fit_pair(ref, gen, limit);
    throw EvaluatorError("claim pair of " + std::to_string(ref.size()) + " + " + std::to_string(gen.size()) +
                         " tokens exceeds max_seq_len " + std::to_string(limit) + "; truncate to " +
                         std::to_string(r.size()) + " + " + std::to_string(g.size()));
  }
  return tc::encode_sequence(pair_sequence(ref, gen), encoder);
}

AspectOutput aspect_scores(const Tensor& h_shared, const AspectHeads& heads) {
  if (!h_shared.defined() || h_shared.numel() == 0) throw EvaluatorError("empty shared encoding");
  if (h_shared.cols() != heads.queries.cols()) {
    throw EvaluatorError("shared encoding width " + std::to_string(h_shared.cols()) + " does not match aspect heads " +
                         std::to_string(heads.queries.cols()));
  }
  // One single-head attention per aspect: query e_k, keys and values h_shared.
  Tensor hk = nx::scaled_dot_attention(heads.queries, h_shared, h_shared);
  Tensor ones = Tensor::full({h_shared.cols(), 1}, 1.0);
  Tensor logits = nx::add(nx::transpose(nx::matmul(nx::mul(heads.score_weights, hk), ones)), heads.score_bias);
  AspectOutput out;
  out.scores = nx::sigmoid(logits);
  out.attention = nx::attention_weights(heads.queries, h_shared, 1).front();
  return out;
}

std::pair<Tensor, Tensor> overall_score(const Tensor& scores, const Tensor& weight_logits) {
  if (scores.numel() != kNumAspects || weight_logits.numel() != kNumAspects) {
    throw EvaluatorError("overall score needs 5 aspect scores and 5 weight logits");
  }
  Tensor w = nx::softmax_rows(weight_logits);
  return {nx::sum(nx::mul(w, scores)), w};
}

Tensor adaptive_margins(const Tensor& alpha, const AspectHeads& heads, const MarginAdapter& adapter) {
  if (alpha.numel() != kNumDomains) throw EvaluatorError("domain mixture must have 5 entries");
  Tensor d_embed = nx::matmul(alpha, adapter.domain_embedding);
  Tensor z = nx::tanh(nx::linear(d_embed, adapter.projection, adapter.bias));
  Tensor mu = Tensor::row({heads.base_margin.begin(), heads.base_margin.end()});
  Tensor beta = Tensor::row({heads.strength.begin(), heads.strength.end()});
  return nx::add(mu, nx::mul(beta, z));
}

double adaptive_margin(std::size_t aspect, const Tensor& alpha, const AspectHeads& heads, const MarginAdapter& adapter) {
  if (aspect >= kNumAspects) throw EvaluatorError("aspect index out of range");
  nx::NoGradGuard no_grad;
  return adaptive_margins(alpha, heads, adapter).data()[aspect];
}

QualityReport evaluate_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen,
                            const EvaluatorModel& model, std::span<const double> alpha) {
  nx::NoGradGuard no_grad;
  std::vector<double> mix(alpha.begin(), alpha.end());
  if (mix.empty()) mix.assign(kNumDomains, 1.0 / kNumDomains);
  if (mix.size() != kNumDomains) throw EvaluatorError("domain mixture must have 5 entries");
  auto [r, g] = fit_pair(ref, gen, model.encoder.config.max_seq_len);
  auto out = aspect_scores(encode_pair(r, g, model.encoder), model.heads);
  auto [overall, w] = overall_score(out.scores, model.heads.weight_logits);
  Tensor margins = adaptive_margins(Tensor::row(mix), model.heads, model.margin);
  QualityReport rep;
  for (std::size_t k = 0; k < kNumAspects; ++k) {
    rep.aspect_scores[k] = out.scores.data()[k];
    rep.aspect_weights[k] = w.data()[k];
    rep.display_scores[k] = 10.0 * rep.aspect_scores[k];
    rep.margins[k] = margins.data()[k];
    rep.domain_mixture[k] = mix[k];
  }
  rep.overall = overall.item();
  return rep;
}

std::string to_json(const QualityReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json scores;
  for (std::size_t k = 0; k < kNumAspects; ++k) scores[kAspectNames[k]] = r.aspect_scores[k];
  j["aspect_scores"] = scores;
  j["aspect_weights"] = r.aspect_weights;
  j["overall"] = r.overall;
  j["display_scores"] = r.display_scores;
  j["margins"] = r.margins;
  j["domain_mixture"] = r.domain_mixture;
  return j.dump();
}

}  // namespace claimforge::evaluator

#include "claimforge/generator/generate.hpp"

#include <algorithm>
#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::generator {

namespace nx = numerics;

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t sample_from(const std::vector<double>& logits, double temperature, nx::Rng& rng) {
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
  auto p = nx::softmax(scaled);
  double u = rng.uniform(), acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace

Generation decode(const TokenIds& prompt, const DecoderParams& decoder,
                  std::vector<textcore::ProjectionOverride> overrides, const GenerateOptions& options) {
  if (options.max_len < 1) throw GeneratorError("max_len must be at least 1");
  if (prompt.empty()) throw GeneratorError("empty prompt");
  if (prompt.size() + options.max_len > decoder.config.max_seq_len) {
    throw GeneratorError("prompt of " + std::to_string(prompt.size()) + " tokens plus max_len " +
                         std::to_string(options.max_len) + " exceeds max_seq_len " +
                         std::to_string(decoder.config.max_seq_len));
  }
  if (options.mode == DecodeMode::sample && !(options.temperature > 0.0)) {
    throw GeneratorError("sampling temperature must be positive");
  }
  nx::Rng rng = nx::Rng(options.seed).substream("sampling");
  DecoderCache cache(decoder, std::move(overrides));
  Generation g;
  auto logits = cache.feed(prompt);
  while (g.tokens.size() < options.max_len) {
    if (options.keep_logits) g.step_logits.push_back(logits);
    std::size_t next = options.mode == DecodeMode::greedy ? argmax(logits)
                                                          : sample_from(logits, options.temperature, rng);
    if (next == textcore::Vocabulary::kEos) {
      g.stopped_at_eos = true;
      break;
    }
    g.tokens.push_back(next);
    if (g.tokens.size() == options.max_len) break;
    std::size_t one[] = {next};
    logits = cache.feed(one);
  }
  return g;
}

DomainPrediction classify_domain(const chunker::Document& doc, const GeneratorModel& model) {
  if (doc.tokens.empty()) throw GeneratorError("empty document");
  nx::NoGradGuard no_grad;
  return predict_domain(description_features(doc.tokens, model.decoder.token_embedding), model.classifier);
}

Generation generate(const chunker::Document& doc, const GeneratorModel& model, const GenerateOptions& options) {
  if (doc.tokens.empty()) throw GeneratorError("empty document");
  nx::NoGradGuard no_grad;
  auto domain = classify_domain(doc, model);
  std::vector<textcore::ProjectionOverride> overrides;
  if (options.use_adapters) {
    Tensor alpha = Tensor::row({domain.alpha.begin(), domain.alpha.end()});
    overrides = adapted_projections(model.decoder, model.bank, alpha);
  }
  auto g = decode(build_prompt(doc.tokens, model.max_prefix_tokens), model.decoder, std::move(overrides), options);
  g.domain = domain;
  return g;
}

}  // namespace claimforge::generator

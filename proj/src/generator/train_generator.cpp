#include "claimforge/generator/train_generator.hpp"

#include <spdlog/spdlog.h>

#include "claimforge/numerics/ops.hpp"
#include "claimforge/training/optimizer.hpp"

namespace claimforge::generator {

namespace nx = numerics;
using textcore::Vocabulary;

SampleLoss sample_loss(const GenerationSample& sample, const GeneratorModel& model) {
  if (sample.description.empty()) throw GeneratorError("empty document");
  if (sample.claims.empty()) throw GeneratorError("sample " + sample.id + " has no claim tokens");
  Tensor features = description_features(sample.description, model.decoder.token_embedding);
  Tensor logits = model.classifier.logits(features);
  Tensor alpha = nx::softmax_rows(logits);

  TokenIds ids = build_prompt(sample.description, model.max_prefix_tokens);
  const std::size_t sep = ids.size() - 1;
  ids.insert(ids.end(), sample.claims.begin(), sample.claims.end());
  // Position p predicts token p + 1; the last input position predicts EOS.
  std::vector<std::size_t> targets(ids.begin() + sep + 1, ids.end());
  targets.push_back(Vocabulary::kEos);

  auto overrides = adapted_projections(model.decoder, model.bank, alpha);
  SampleLoss out;
  out.lm = nx::cross_entropy(decoder_logits(ids, model.decoder, overrides, sep), targets);
  if (sample.domain) {
    std::size_t label[] = {*sample.domain};
    out.domain = nx::cross_entropy(logits, label);
  }
  return out;
}

double evaluate_loss(const std::vector<GenerationSample>& samples, const GeneratorModel& model) {
  if (samples.empty()) return 0.0;
  nx::NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& s : samples) total += sample_loss(s, model).lm.item();
  return total / static_cast<double>(samples.size());
}

double domain_accuracy(const std::vector<GenerationSample>& samples, const GeneratorModel& model) {
  std::size_t labeled = 0, correct = 0;
  nx::NoGradGuard no_grad;
  for (const auto& s : samples) {
    if (!s.domain) continue;
    ++labeled;
    auto p = predict_domain(description_features(s.description, model.decoder.token_embedding), model.classifier);
    if (p.label == *s.domain) ++correct;
  }
  return labeled ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
}

std::vector<training::SampleKey> difficulty_keys(const std::vector<GenerationSample>& samples) {
  std::vector<training::SampleKey> keys;
  keys.reserve(samples.size());
  for (const auto& s : samples) keys.push_back({s.id, training::difficulty_key(s.claims.size(), s.dependent_claims)});
  return keys;
}

training::TrainLog train_generator(const std::vector<GenerationSample>& samples, GeneratorModel& model,
                                   const GeneratorTrainConfig& config, const std::vector<GenerationSample>& held_out,
                                   training::TrainLog log) {
  if (samples.empty()) throw training::TrainingError("empty generation corpus");
  if (config.batch_size == 0) throw training::TrainingError("batch size must be positive");
  config.schedule.validate();
  if (config.train_classifier) {
    for (const auto& s : samples) {
      if (!s.domain) throw training::TrainingError("sample " + s.id + " has no domain label");
    }
  }
  std::vector<Tensor> params = model.bank.parameters();
  if (config.train_base) {
    auto p = model.decoder.parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  if (config.train_classifier) {
    auto p = model.classifier.parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  training::AdamW opt(params, {.lr = config.lr, .weight_decay = config.weight_decay});

  std::array<training::DifficultyBucket, 3> buckets;
  if (samples.size() >= 3) {
    buckets = training::bucket_corpus(difficulty_keys(samples));
  } else {
    buckets[0].members.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) buckets[0].members[i] = i;
    buckets[1].members = buckets[2].members = buckets[0].members;
  }
  nx::Rng rng = nx::Rng(config.seed).substream("generator-batches");

  for (std::size_t step = 0; step < config.steps; ++step) {
    const double t = static_cast<double>(step);
    auto batch = config.curriculum ? training::sample_batch(buckets, t, config.schedule, config.batch_size, rng)
                                   : training::sample_uniform(buckets, config.batch_size, rng);
    opt.zero_grad();
    Tensor lm_total, dom_total;
    for (auto idx : batch) {
      auto l = sample_loss(samples[idx], model);
      lm_total = lm_total.defined() ? nx::add(lm_total, l.lm) : l.lm;
      if (config.train_classifier && l.domain.defined()) {
        dom_total = dom_total.defined() ? nx::add(dom_total, l.domain) : l.domain;
      }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    Tensor loss = nx::scale(lm_total, inv);
    double dom_value = 0.0;
    if (dom_total.defined()) {
      Tensor dom = nx::scale(dom_total, inv);
      dom_value = dom.item();
      loss = nx::add(loss, nx::scale(dom, config.domain_loss_weight));
    }
    const double lm_value = lm_total.item() * inv;
    nx::backward(loss);
    double norm = training::clip_grad_norm(params, config.clip_norm);
    opt.step();
    training::StepRecord rec{step, training::difficulty_level(t, config.schedule),
                             training::curriculum_progress(t, config.schedule),
                             {{"total", loss.item()}, {"lm", lm_value}, {"domain", dom_value}}, norm};
    if (config.eval_every && !held_out.empty() && (step + 1) % config.eval_every == 0) {
      rec.losses["eval"] = evaluate_loss(held_out, model);
      spdlog::debug("generator step {} eval loss {:.4f}", step, rec.losses["eval"]);
    }
    log.record(std::move(rec));
  }
  return log;
}

}  // namespace claimforge::generator

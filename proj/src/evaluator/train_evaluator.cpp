#include "claimforge/evaluator/train_evaluator.hpp"

#include <spdlog/spdlog.h>

#include "claimforge/numerics/ops.hpp"
#include "claimforge/training/losses.hpp"
#include "claimforge/training/optimizer.hpp"

namespace claimforge::evaluator {

namespace nx = numerics;

namespace {

Tensor domain_row(const std::optional<std::size_t>& domain) {
  std::vector<double> a(kNumDomains, domain ? 0.0 : 1.0 / kNumDomains);
  if (domain) a.at(*domain) = 1.0;
  return Tensor::row(std::move(a));
}

Tensor candidate_scores(const TokenIds& ref, const TokenIds& gen, const EvaluatorModel& model) {
  auto [r, g] = fit_pair(ref, gen, model.encoder.config.max_seq_len);
  return aspect_scores(encode_pair(r, g, model.encoder), model.heads).scores;
}

}  // namespace

Tensor tuple_loss(const RankedTuple& t, const EvaluatorModel& model) {
  Tensor better = candidate_scores(t.reference, t.better, model);
  Tensor worse = candidate_scores(t.reference, t.worse, model);
  Tensor margins = adaptive_margins(domain_row(t.domain), model.heads, model.margin);
  return nx::sum(nx::relu(nx::sub(margins, nx::sub(better, worse))));
}

double ordering_accuracy(const std::vector<RankedTuple>& tuples, const EvaluatorModel& model) {
  if (tuples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& t : tuples) {
    std::vector<double> alpha(domain_row(t.domain).to_vector());
    auto b = evaluate_pair(t.reference, t.better, model, alpha);
    auto w = evaluate_pair(t.reference, t.worse, model, alpha);
    if (b.overall > w.overall) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(tuples.size());
}

training::TrainLog train_evaluator(const std::vector<RankedTuple>& tuples, EvaluatorModel& model,
                                   const EvaluatorTrainConfig& config, training::TrainLog log) {
  std::vector<const RankedTuple*> usable;
  for (const auto& t : tuples) {
    if (t.better == t.worse) {
      spdlog::warn("skipping tuple {}: better and worse candidates are identical", t.id);
      continue;
    }
    usable.push_back(&t);
  }
  if (usable.empty()) throw training::TrainingError("empty evaluator corpus");
  if (config.batch_size == 0) throw training::TrainingError("batch size must be positive");

  std::vector<Tensor> params;
  if (config.train_encoder) params = model.encoder.parameters();
  for (const auto& t : model.heads.parameters()) params.push_back(t);
  for (const auto& t : model.margin.parameters()) params.push_back(t);
  training::AdamW opt(params, {.lr = config.lr, .weight_decay = config.weight_decay});
  nx::Rng rng = nx::Rng(config.seed).substream("evaluator-batches");

  for (std::size_t step = 0; step < config.steps; ++step) {
    opt.zero_grad();
    Tensor total;
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      Tensor l = tuple_loss(*usable[rng.below(usable.size())], model);
      total = total.defined() ? nx::add(total, l) : l;
    }
    Tensor loss = nx::scale(total, 1.0 / static_cast<double>(config.batch_size));
    nx::backward(loss);
    double norm = training::clip_grad_norm(params, config.clip_norm);
    opt.step();
    log.record({step, 1, 0.0, {{"margin", loss.item()}}, norm});
  }
  return log;
}

}  // namespace claimforge::evaluator

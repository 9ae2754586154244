#include "claimforge/similarity/train_similarity.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "claimforge/numerics/ops.hpp"
#include "claimforge/training/curriculum.hpp"
#include "claimforge/training/losses.hpp"
#include "claimforge/training/optimizer.hpp"

namespace claimforge::similarity {

namespace nx = numerics;

BatchLoss similarity_batch_loss(const std::vector<const RelationPair*>& batch, const textcore::EncoderParams& encoder,
                                const HeadBank& bank, const SimilarityTrainConfig& config) {
  if (!(config.temperature > 0.0)) throw training::TrainingError("contrastive temperature must be positive");
  const std::size_t n = batch.size();
  std::vector<ProjectedChunk> claims, docs;
  for (const auto* p : batch) {
    claims.push_back(project_claim(textcore::encode_sequence(p->claim, encoder), bank));
    docs.push_back(project_doc(textcore::encode_sequence(p->doc, encoder), bank));
  }
  std::vector<Tensor> rows;
  std::vector<Tensor> aux_terms;
  std::vector<std::size_t> targets(n, nx::kIgnoreTarget);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor> row;
    for (std::size_t j = 0; j < n; ++j) {
      auto f = similarity_forward(claims[i], docs[j], bank);
      row.push_back(f.similarity);
      if (i == j && batch[i]->related && batch[i]->label) {
        aux_terms.push_back(nx::log(nx::pick(f.group_masses, 0, *batch[i]->label)));
      }
    }
    rows.push_back(nx::concat_cols(row));
    if (batch[i]->related) targets[i] = i;
  }
  if (std::all_of(targets.begin(), targets.end(), [](std::size_t t) { return t == nx::kIgnoreTarget; })) {
    throw training::TrainingError("batch with no positive pair");
  }
  Tensor sims = nx::concat_rows(rows);
  Tensor contrastive = nx::cross_entropy(nx::scale(sims, 1.0 / config.temperature), targets);
  BatchLoss out;
  out.contrastive = contrastive.item();
  out.total = contrastive;
  if (!aux_terms.empty() && config.aux_weight != 0.0) {
    Tensor aux = nx::scale(nx::sum(nx::concat_cols(aux_terms)), -1.0 / static_cast<double>(aux_terms.size()));
    out.auxiliary = aux.item();
    out.total = nx::add(contrastive, nx::scale(aux, config.aux_weight));
  }
  return out;
}

training::TrainLog train_similarity(const std::vector<RelationPair>& pairs, textcore::EncoderParams& encoder,
                                    HeadBank& bank, const SimilarityTrainConfig& config, training::TrainLog log) {
  if (pairs.empty()) throw training::TrainingError("empty similarity corpus");
  if (config.batch_size == 0) throw training::TrainingError("batch size must be positive");
  auto params = bank.parameters();
  if (config.train_encoder) {
    auto enc = encoder.parameters();
    params.insert(params.end(), enc.begin(), enc.end());
  }
  training::AdamW opt(params, {.lr = config.lr, .weight_decay = config.weight_decay});
  nx::Rng rng = nx::Rng(config.seed).substream("similarity-batches");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<const RelationPair*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) batch.push_back(&pairs[order[i]]);
      opt.zero_grad();
      auto loss = similarity_batch_loss(batch, encoder, bank, config);
      nx::backward(loss.total);
      double norm = training::clip_grad_norm(params, config.clip_norm);
      opt.step();
      log.record({step++, 1, 0.0,
                  {{"total", loss.total.item()}, {"contrastive", loss.contrastive}, {"auxiliary", loss.auxiliary}},
                  norm});
    }
    spdlog::debug("similarity epoch {} loss {:.4f}", epoch, log.records().back().losses.at("total"));
  }
  return log;
}

}  // namespace claimforge::similarity

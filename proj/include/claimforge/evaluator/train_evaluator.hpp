#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "claimforge/evaluator/evaluator.hpp"
#include "claimforge/training/train_log.hpp"

namespace claimforge::evaluator {

// A reference claim with two candidates whose ordering is known.
struct RankedTuple {
  std::string id;
  TokenIds reference;
  TokenIds better;
  TokenIds worse;
  std::optional<std::size_t> domain;
};

struct EvaluatorTrainConfig {
  std::size_t steps = 500;
  std::size_t batch_size = 4;
  double lr = 5e-5;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  bool train_encoder = true;
  std::uint64_t seed = 0;
};

/// Σ_k max(0, margin_k − s_k(better) + s_k(worse)) with margins from the
/// tuple's domain (one-hot; uniform when unknown).
numerics::Tensor tuple_loss(const RankedTuple& tuple, const EvaluatorModel& model);

// Fraction of tuples whose better candidate gets the higher overall score.
double ordering_accuracy(const std::vector<RankedTuple>& tuples, const EvaluatorModel& model);

// Tuples with better == worse are skipped with a warning.
training::TrainLog train_evaluator(const std::vector<RankedTuple>& tuples, EvaluatorModel& model,
                                   const EvaluatorTrainConfig& config, training::TrainLog log = {});

}  // namespace claimforge::evaluator

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "claimforge/generator/decoder.hpp"
#include "claimforge/training/curriculum.hpp"
#include "claimforge/training/train_log.hpp"

namespace claimforge::generator {

struct GenerationSample {
  std::string id;
  TokenIds description;
  TokenIds claims;
  std::optional<std::size_t> domain;
  std::size_t dependent_claims = 0;
};

struct GeneratorTrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 4;
  double lr = 5e-5;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  bool curriculum = true;
  training::CurriculumSchedule schedule;
  bool train_base = true;
  bool train_classifier = true;
  double domain_loss_weight = 1.0;
  std::uint64_t seed = 0;
  // Held-out loss is logged as "eval" every `eval_every` steps when > 0.
  std::size_t eval_every = 0;
};

struct SampleLoss {
  numerics::Tensor lm;      // mean next-token cross-entropy over claim tokens and EOS
  numerics::Tensor domain;  // domain cross-entropy, undefined without a label
};

/// Teacher-forced pass over [BOS] prefix [SEP] claims [EOS] with the
/// classifier's α mixing the adapters.
SampleLoss sample_loss(const GenerationSample& sample, const GeneratorModel& model);

// Mean claim-token cross-entropy with no graph recorded.
double evaluate_loss(const std::vector<GenerationSample>& samples, const GeneratorModel& model);

// Fraction of labeled samples whose predicted domain matches the label.
double domain_accuracy(const std::vector<GenerationSample>& samples, const GeneratorModel& model);

std::vector<training::SampleKey> difficulty_keys(const std::vector<GenerationSample>& samples);

training::TrainLog train_generator(const std::vector<GenerationSample>& samples, GeneratorModel& model,
                                   const GeneratorTrainConfig& config,
                                   const std::vector<GenerationSample>& held_out = {},
                                   training::TrainLog log = {});

}  // namespace claimforge::generator

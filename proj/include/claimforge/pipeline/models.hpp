#pragma once

#include <cstddef>
#include <filesystem>

#include "claimforge/evaluator/evaluator.hpp"
#include "claimforge/generator/decoder.hpp"
#include "claimforge/pipeline/config.hpp"
#include "claimforge/similarity/head_bank.hpp"
#include "claimforge/textcore/vocabulary.hpp"

namespace claimforge::pipeline {

inline constexpr const char* kSimilarityCheckpoint = "similarity.ckpt";
inline constexpr const char* kGeneratorCheckpoint = "generator.ckpt";
inline constexpr const char* kEvaluatorCheckpoint = "evaluator.ckpt";
inline constexpr const char* kVocabFile = "vocab.txt";

struct SimilarityModel {
  textcore::EncoderParams encoder;
  similarity::HeadBank heads;
};

struct Models {
  SimilarityModel similarity;
  generator::GeneratorModel generator;
  std::size_t generator_steps = 0;  // curriculum step t reached in training
  evaluator::EvaluatorModel evaluator;
};

// Seed-initialized models; each model draws from its own named sub-stream.
SimilarityModel init_similarity(const PipelineConfig& config, std::size_t vocab_size);
generator::GeneratorModel init_generator(const PipelineConfig& config, std::size_t vocab_size);
evaluator::EvaluatorModel init_evaluator(const PipelineConfig& config, std::size_t vocab_size);

void save_similarity(const std::filesystem::path& path, const SimilarityModel& model);
void save_generator(const std::filesystem::path& path, const generator::GeneratorModel& model, std::size_t steps);
void save_evaluator(const std::filesystem::path& path, const evaluator::EvaluatorModel& model);

// Loading validates model_dim and vocabulary size against the config and
// vocabulary, throwing InputError that names both values.
SimilarityModel load_similarity(const std::filesystem::path& path, const PipelineConfig& config,
                                std::size_t vocab_size);
generator::GeneratorModel load_generator(const std::filesystem::path& path, const PipelineConfig& config,
                                         std::size_t vocab_size, std::size_t* steps = nullptr);
evaluator::EvaluatorModel load_evaluator(const std::filesystem::path& path, const PipelineConfig& config,
                                         std::size_t vocab_size);

// Loads whichever checkpoints exist in `dir` (empty path: none) and
// seed-initializes the rest.
Models load_models(const std::filesystem::path& dir, const PipelineConfig& config, std::size_t vocab_size);

}  // namespace claimforge::pipeline

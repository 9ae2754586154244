#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "claimforge/evaluator/train_evaluator.hpp"
#include "claimforge/generator/generate.hpp"
#include "claimforge/generator/train_generator.hpp"
#include "claimforge/similarity/train_similarity.hpp"
#include "claimforge/textcore/encoder.hpp"

namespace claimforge::pipeline {

// Every tunable of the library, read from a flat `key = value` file.
struct PipelineConfig {
  std::uint64_t seed = 0;

  std::size_t model_dim = 512;
  std::size_t num_heads = 8;
  std::size_t head_dim = 64;
  std::size_t num_layers = 2;
  std::size_t max_seq_len = 1024;
  std::size_t ffn_dim = 0;
  std::size_t vocab_cap = 8192;

  double chunk_centering = 0.0;
  double chunk_scale = 1.0;
  std::size_t top_k = 5;
  std::size_t workers = 0;  // 0 means hardware concurrency, capped at 8

  std::size_t max_prefix_tokens = 256;
  std::size_t gen_max_len = 128;
  std::string gen_mode = "greedy";
  double gen_temperature = 1.0;

  double lr = 5e-5;
  double weight_decay = 0.01;
  std::size_t batch_size = 4;
  double clip_norm = 1.0;

  std::size_t sim_epochs = 10;
  double sim_temperature = 0.1;
  double sim_aux_weight = 0.5;
  bool sim_train_encoder = true;

  std::size_t gen_steps = 1000;
  bool curriculum = true;
  double curriculum_gamma = 0.01;
  double curriculum_t0 = 5000.0;
  double level3_tau_threshold = 0.999;
  bool verbatim_mode = false;
  double domain_loss_weight = 1.0;
  std::size_t gen_eval_every = 0;

  std::size_t eval_steps = 500;
  bool eval_train_encoder = true;
  double base_margin = 0.3;
  double margin_strength = 0.1;

  double rouge_beta = 1.2;
  std::size_t bleu_max_n = 4;

  textcore::EncoderConfig encoder_config() const;
  training::CurriculumSchedule schedule() const;
  similarity::SimilarityTrainConfig similarity_training() const;
  generator::GeneratorTrainConfig generator_training() const;
  evaluator::EvaluatorTrainConfig evaluator_training() const;
  generator::GenerateOptions generate_options() const;

  // Throws InputError naming the offending key.
  void validate() const;
};

// Blank lines and lines starting with '#' are ignored. Unknown keys and
// unparsable values throw InputError with the line number.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string to_text(const PipelineConfig& config);

}  // namespace claimforge::pipeline

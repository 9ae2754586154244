#include "claimforge/pipeline/models.hpp"

#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/rng.hpp"
#include "claimforge/pipeline/corpus.hpp"

namespace claimforge::pipeline {

namespace nx = numerics;

namespace {

nx::Rng init_stream(const PipelineConfig& config, const char* name) {
  return nx::Rng(config.seed).substream("init").substream(name);
}

nx::Checkpoint open_checkpoint(const std::filesystem::path& path, const PipelineConfig& config) {
  if (!std::filesystem::exists(path)) throw InputError("checkpoint not found: " + path.string());
  nx::Checkpoint ck;
  try {
    ck = nx::load_checkpoint(path);
  } catch (const nx::NumericsError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (auto it = ck.meta.find("model_dim"); it != ck.meta.end() && it->second != std::to_string(config.model_dim)) {
    throw InputError(path.filename().string() + ": checkpoint model_dim " + it->second +
                     " does not match config model_dim " + std::to_string(config.model_dim));
  }
  return ck;
}

void check_vocab(const std::filesystem::path& path, std::size_t rows, std::size_t vocab_size) {
  if (rows != vocab_size) {
    throw InputError(path.filename().string() + ": checkpoint vocabulary size " + std::to_string(rows) +
                     " does not match vocabulary size " + std::to_string(vocab_size));
  }
}

template <typename F>
auto wrap_errors(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const nx::CheckpointError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  } catch (const textcore::TextError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  } catch (const evaluator::EvaluatorError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  } catch (const generator::GeneratorError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  } catch (const similarity::SimilarityError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  }
}

void stamp(nx::Checkpoint& ck, std::size_t model_dim, const char* kind) {
  ck.meta["model_dim"] = std::to_string(model_dim);
  ck.meta["kind"] = kind;
}

}  // namespace

SimilarityModel init_similarity(const PipelineConfig& config, std::size_t vocab_size) {
  nx::Rng rng = init_stream(config, "similarity");
  nx::Rng enc_rng = rng.substream("encoder");
  nx::Rng bank_rng = rng.substream("heads");
  SimilarityModel m;
  m.encoder = textcore::EncoderParams::init(config.encoder_config(), vocab_size, enc_rng);
  m.heads = similarity::HeadBank::init(config.model_dim, bank_rng);
  return m;
}

generator::GeneratorModel init_generator(const PipelineConfig& config, std::size_t vocab_size) {
  nx::Rng rng = init_stream(config, "generator");
  return generator::GeneratorModel::init(config.encoder_config(), vocab_size, rng, config.max_prefix_tokens);
}

evaluator::EvaluatorModel init_evaluator(const PipelineConfig& config, std::size_t vocab_size) {
  nx::Rng rng = init_stream(config, "evaluator");
  auto m = evaluator::EvaluatorModel::init(config.encoder_config(), vocab_size, rng);
  m.heads.base_margin.fill(config.base_margin);
  m.heads.strength.fill(config.margin_strength);
  return m;
}

void save_similarity(const std::filesystem::path& path, const SimilarityModel& m) {
  nx::Checkpoint ck;
  m.encoder.export_to(ck, "encoder/");
  m.heads.export_to(ck, "heads/");
  stamp(ck, m.encoder.config.model_dim, "similarity");
  nx::save_checkpoint(path, ck);
}

void save_generator(const std::filesystem::path& path, const generator::GeneratorModel& m, std::size_t steps) {
  nx::Checkpoint ck;
  m.export_to(ck);
  stamp(ck, m.decoder.config.model_dim, "generator");
  ck.meta["steps"] = std::to_string(steps);
  nx::save_checkpoint(path, ck);
}

void save_evaluator(const std::filesystem::path& path, const evaluator::EvaluatorModel& m) {
  nx::Checkpoint ck;
  m.export_to(ck);
  stamp(ck, m.encoder.config.model_dim, "evaluator");
  nx::save_checkpoint(path, ck);
}

SimilarityModel load_similarity(const std::filesystem::path& path, const PipelineConfig& config,
                                std::size_t vocab_size) {
  auto ck = open_checkpoint(path, config);
  return wrap_errors(path, [&] {
    SimilarityModel m;
    m.encoder = textcore::EncoderParams::import_from(ck, "encoder/", config.encoder_config());
    m.heads = similarity::HeadBank::import_from(ck, "heads/");
    check_vocab(path, m.encoder.vocab_size(), vocab_size);
    return m;
  });
}

generator::GeneratorModel load_generator(const std::filesystem::path& path, const PipelineConfig& config,
                                         std::size_t vocab_size, std::size_t* steps) {
  auto ck = open_checkpoint(path, config);
  return wrap_errors(path, [&] {
    auto m = generator::GeneratorModel::import_from(ck, config.encoder_config());
    check_vocab(path, m.decoder.vocab_size(), vocab_size);
    if (steps) {
      auto it = ck.meta.find("steps");
      *steps = it == ck.meta.end() ? 0 : std::stoul(it->second);
    }
    return m;
  });
}

evaluator::EvaluatorModel load_evaluator(const std::filesystem::path& path, const PipelineConfig& config,
                                         std::size_t vocab_size) {
  auto ck = open_checkpoint(path, config);
  return wrap_errors(path, [&] {
    auto m = evaluator::EvaluatorModel::import_from(ck, config.encoder_config());
    check_vocab(path, m.encoder.vocab_size(), vocab_size);
    return m;
  });
}

Models load_models(const std::filesystem::path& dir, const PipelineConfig& config, std::size_t vocab_size) {
  auto present = [&](const char* name) { return !dir.empty() && std::filesystem::exists(dir / name); };
  Models m;
  m.similarity = present(kSimilarityCheckpoint) ? load_similarity(dir / kSimilarityCheckpoint, config, vocab_size)
                                                : init_similarity(config, vocab_size);
  if (present(kGeneratorCheckpoint)) {
    m.generator = load_generator(dir / kGeneratorCheckpoint, config, vocab_size, &m.generator_steps);
    m.generator.max_prefix_tokens = config.max_prefix_tokens;
  } else {
    m.generator = init_generator(config, vocab_size);
  }
  m.evaluator = present(kEvaluatorCheckpoint) ? load_evaluator(dir / kEvaluatorCheckpoint, config, vocab_size)
                                              : init_evaluator(config, vocab_size);
  return m;
}

}  // namespace claimforge::pipeline

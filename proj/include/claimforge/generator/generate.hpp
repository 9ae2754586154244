#pragma once

#include <cstdint>
#include <vector>

#include "claimforge/chunker/document.hpp"
#include "claimforge/generator/decoder.hpp"

namespace claimforge::generator {

enum class DecodeMode { greedy, sample };

struct GenerateOptions {
  std::size_t max_len = 64;
  DecodeMode mode = DecodeMode::greedy;
  double temperature = 1.0;  // sample mode only
  std::uint64_t seed = 0;    // sample mode only
  bool use_adapters = true;
  bool keep_logits = false;
};

struct Generation {
  TokenIds tokens;  // generated ids, without the terminating EOS
  bool stopped_at_eos = false;
  DomainPrediction domain;
  std::vector<std::vector<double>> step_logits;  // filled when keep_logits
};

// Autoregressive continuation of `prompt` with fixed projection overrides.
Generation decode(const TokenIds& prompt, const DecoderParams& decoder,
                  std::vector<textcore::ProjectionOverride> overrides, const GenerateOptions& options);

/// Classifies the description once, folds the α-mixed adapters into the
/// decoder's Q/V projections and decodes claims after the description prompt.
Generation generate(const chunker::Document& doc, const GeneratorModel& model, const GenerateOptions& options = {});

DomainPrediction classify_domain(const chunker::Document& doc, const GeneratorModel& model);

}  // namespace claimforge::generator

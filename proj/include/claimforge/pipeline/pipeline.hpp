#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "claimforge/pipeline/config.hpp"
#include "claimforge/pipeline/corpus.hpp"
#include "claimforge/pipeline/models.hpp"
#include "claimforge/textcore/vocabulary.hpp"

namespace claimforge::pipeline {

inline constexpr const char* kReportFile = "report.jsonl";
inline constexpr const char* kSummaryFile = "summary.txt";
inline constexpr const char* kTimingsFile = "timings.jsonl";

struct PipelineInputs {
  std::filesystem::path corpus;
  std::filesystem::path prior_art;  // empty: no prior art
  std::filesystem::path models;     // empty: seed-initialized models
  std::filesystem::path vocab;      // empty: models/vocab.txt, else built from the inputs
  std::filesystem::path out;
};

struct SkippedDocument {
  std::string id;
  std::string reason;
};

struct PipelineResult {
  std::vector<std::string> report_lines;  // one JSON object per processed document
  std::vector<std::string> timing_lines;
  std::string summary;
  std::vector<SkippedDocument> skipped;
  std::size_t processed = 0;
};

// Runs the three stages over every corpus record. Documents that fail are
// logged and skipped; the others are unaffected. Writes report.jsonl,
// summary.txt and timings.jsonl into `inputs.out`.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

// Same, on in-memory inputs and without touching the filesystem.
PipelineResult run_pipeline(const CorpusFile& corpus, const std::vector<CorpusRecord>& prior_art,
                            const Models& models, const textcore::Vocabulary& vocab, const PipelineConfig& config);

}  // namespace claimforge::pipeline

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "claimforge/chunker/document.hpp"
#include "claimforge/generator/train_generator.hpp"
#include "claimforge/textcore/vocabulary.hpp"

namespace claimforge::pipeline {

// Bad user input: unreadable files, malformed records, incompatible configs.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusRecord {
  std::string id;
  std::string description;
  std::vector<std::string> claims;
  std::optional<std::string> domain;
  std::optional<std::string> jurisdiction;
  std::optional<std::size_t> figure_count;
};

struct CorpusLineError {
  std::size_t line = 0;  // 1-based
  std::string id;        // empty when the id could not be read
  std::string message;
};

struct CorpusFile {
  std::vector<CorpusRecord> records;
  std::vector<CorpusLineError> errors;
};

// One JSON object per line. Throws InputError on parse or validation failure.
CorpusRecord parse_record(const std::string& line);
std::string to_json_line(const CorpusRecord& record);

// Reads every line; bad lines and duplicate ids land in `errors`, the rest in
// `records` in file order. Throws InputError when the file cannot be opened.
CorpusFile read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

// "1. <claim> 2. <claim> ..."
std::string claims_text(const std::vector<std::string>& claims);
std::size_t dependent_claim_count(const std::vector<std::string>& claims);

chunker::Document to_document(const CorpusRecord& record, const textcore::Vocabulary& vocab);
generator::GenerationSample to_generation_sample(const CorpusRecord& record, const textcore::Vocabulary& vocab);

// Splits generated ids at line-initial "N ." markers; markers are dropped and
// empty claims skipped. Text before the first marker forms the first claim.
std::vector<textcore::TokenIds> split_claims(const textcore::TokenIds& ids, const textcore::Vocabulary& vocab);

}  // namespace claimforge::pipeline

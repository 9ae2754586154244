#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "claimforge/chunker/document.hpp"
#include "claimforge/evaluator/train_evaluator.hpp"
#include "claimforge/pipeline/corpus.hpp"
#include "claimforge/similarity/train_similarity.hpp"

namespace claimforge::pipeline {

inline constexpr std::size_t kMinSynthSize = 15;
inline constexpr std::size_t kDefaultPriorArt = 10;

struct DomainPool {
  std::vector<std::string> subjects;
  std::vector<std::string> components;
  std::vector<std::string> words() const;  // subjects then components
};

// Vocabulary pools indexed like chunker::kDomainNames.
const std::array<DomainPool, chunker::kNumDomains>& domain_pools();

struct RelationRecord {
  std::string id;
  std::string claim;
  std::string doc;
  std::string label;  // one of similarity::kRelationshipNames
};

struct TupleRecord {
  std::string id;
  std::string reference;
  std::string better;
  std::string worse;
  std::string domain;
};

struct SynthCorpus {
  std::vector<CorpusRecord> records;
  std::vector<CorpusRecord> prior_art;
  std::vector<RelationRecord> relations;
  std::vector<TupleRecord> tuples;
};

// Template-generated corpus. Records cycle through the five domains, so
// size 60 gives 12 per domain. Throws InputError when size < 15.
SynthCorpus synth_corpus(std::uint64_t seed, std::size_t size, std::size_t prior_art = kDefaultPriorArt);

// Writes corpus.jsonl, prior_art.jsonl, relations.jsonl, tuples.jsonl,
// domains.json and vocab.txt into `dir`.
void write_synth(const std::filesystem::path& dir, const SynthCorpus& corpus, std::size_t vocab_cap = 8192);

std::vector<RelationRecord> read_relations(const std::filesystem::path& path);
std::vector<TupleRecord> read_tuples(const std::filesystem::path& path);

std::vector<similarity::RelationPair> to_relation_pairs(const std::vector<RelationRecord>& relations,
                                                        const textcore::Vocabulary& vocab);
std::vector<evaluator::RankedTuple> to_ranked_tuples(const std::vector<TupleRecord>& tuples,
                                                     const textcore::Vocabulary& vocab);

// All texts a vocabulary should cover.
std::vector<std::string> corpus_texts(const SynthCorpus& corpus);

}  // namespace claimforge::pipeline

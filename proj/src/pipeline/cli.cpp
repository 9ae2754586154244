#include "claimforge/pipeline/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "claimforge/chunker/chunker.hpp"
#include "claimforge/evaluator/train_evaluator.hpp"
#include "claimforge/generator/generate.hpp"
#include "claimforge/generator/train_generator.hpp"
#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/pipeline/metrics.hpp"
#include "claimforge/pipeline/pipeline.hpp"
#include "claimforge/pipeline/synth.hpp"
#include "claimforge/similarity/similarity.hpp"
#include "claimforge/similarity/train_similarity.hpp"
#include "claimforge/textcore/tokenizer.hpp"

namespace claimforge::pipeline {

namespace fs = std::filesystem;
namespace tc = textcore;
using nlohmann::ordered_json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (const char* env = std::getenv("CLAIMFORGE_SEED")) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw InputError(std::string("CLAIMFORGE_SEED is not an unsigned integer: ") + env);
    }
  }
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

tc::Vocabulary load_vocab(const fs::path& path) {
  try {
    return tc::Vocabulary::load(path);
  } catch (const tc::TextError& e) {
    throw InputError(e.what());
  }
}

std::string read_text(const std::string& inline_text, const std::string& file, const char* what) {
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (inline_text.empty()) throw InputError(std::string("missing ") + what + " text");
  return inline_text;
}

void prepare_models_dir(const fs::path& out, const fs::path& vocab, const PipelineConfig& config) {
  fs::create_directories(out);
  if (fs::absolute(vocab) != fs::absolute(out / kVocabFile)) {
    fs::copy_file(vocab, out / kVocabFile, fs::copy_options::overwrite_existing);
  }
  std::ofstream(out / "config.conf") << to_text(config);
}

int cmd_synth(const Globals& g, std::size_t size, std::size_t prior) {
  auto config = resolve_config(g);
  write_synth(g.out, synth_corpus(config.seed, size, prior), config.vocab_cap);
  spdlog::info("wrote synthetic corpus of {} records to {}", size, g.out);
  return kExitOk;
}

int cmd_chunk(const Globals& g, const std::string& corpus_path, const std::string& vocab_path) {
  auto config = resolve_config(g);
  auto corpus = read_corpus(corpus_path);
  auto vocab = load_vocab(vocab_path);
  fs::create_directories(g.out);
  std::ofstream out(fs::path(g.out) / "chunks.jsonl", std::ios::binary);
  for (const auto& r : corpus.records) {
    auto doc = to_document(r, vocab);
    double kappa = chunker::complexity(doc);
    std::size_t s = chunker::target_size(kappa, config.chunk_centering, config.chunk_scale);
    ordered_json chunks = ordered_json::array();
    for (const auto& c : chunker::chunk(doc, s)) {
      chunks.push_back({{"start", c.start_token}, {"end", c.end_token}, {"hard_split", c.hard_split}});
    }
    out << ordered_json{{"id", r.id}, {"complexity", kappa}, {"chunk_size", s}, {"chunks", chunks}}.dump() << '\n';
  }
  for (const auto& e : corpus.errors) spdlog::error("line {} skipped: {}", e.line, e.message);
  return corpus.errors.empty() ? kExitOk : kExitInputError;
}

int cmd_similarity(const Globals& g, const std::string& claim, const std::string& claim_file, const std::string& doc,
                   const std::string& doc_file, const std::string& vocab_path, const std::string& models) {
  auto config = resolve_config(g);
  auto vocab = load_vocab(vocab_path);
  auto m = load_models(models, config, vocab.size());
  auto claim_ids = vocab.encode(read_text(claim, claim_file, "claim"));
  auto doc_ids = vocab.encode(read_text(doc, doc_file, "document"));
  if (claim_ids.empty() || doc_ids.empty()) throw InputError("claim and document must be nonempty");
  numerics::NoGradGuard no_grad;
  auto limit = [&](const tc::TokenIds& ids) {
    return std::span<const std::size_t>(ids.data(), std::min(ids.size(), config.max_seq_len));
  };
  auto report = similarity::similarity(tc::encode_sequence(limit(claim_ids), m.similarity.encoder),
                                       tc::encode_sequence(limit(doc_ids), m.similarity.encoder),
                                       m.similarity.heads, "claim", "doc");
  std::cout << similarity::to_json_line(report) << '\n';
  return kExitOk;
}

int cmd_train_sim(const Globals& g, const fs::path& data) {
  auto config = resolve_config(g);
  auto vocab = load_vocab(data / kVocabFile);
  auto pairs = to_relation_pairs(read_relations(data / "relations.jsonl"), vocab);
  fs::path out(g.out);
  prepare_models_dir(out, data / kVocabFile, config);
  auto model = init_similarity(config, vocab.size());
  similarity::train_similarity(pairs, model.encoder, model.heads, config.similarity_training(),
                               training::TrainLog(out / "train_similarity.jsonl"));
  save_similarity(out / kSimilarityCheckpoint, model);
  return kExitOk;
}

int cmd_train_gen(const Globals& g, const fs::path& data) {
  auto config = resolve_config(g);
  auto vocab = load_vocab(data / kVocabFile);
  auto corpus = read_corpus(data / "corpus.jsonl");
  if (!corpus.errors.empty()) throw InputError("corpus has " + std::to_string(corpus.errors.size()) + " bad records");
  std::vector<generator::GenerationSample> samples;
  for (const auto& r : corpus.records) samples.push_back(to_generation_sample(r, vocab));
  fs::path out(g.out);
  prepare_models_dir(out, data / kVocabFile, config);
  auto model = init_generator(config, vocab.size());
  auto train_cfg = config.generator_training();
  generator::train_generator(samples, model, train_cfg, {}, training::TrainLog(out / "train_generator.jsonl"));
  save_generator(out / kGeneratorCheckpoint, model, train_cfg.steps);
  return kExitOk;
}

int cmd_train_eval(const Globals& g, const fs::path& data) {
  auto config = resolve_config(g);
  auto vocab = load_vocab(data / kVocabFile);
  auto tuples = to_ranked_tuples(read_tuples(data / "tuples.jsonl"), vocab);
  fs::path out(g.out);
  prepare_models_dir(out, data / kVocabFile, config);
  auto model = init_evaluator(config, vocab.size());
  evaluator::train_evaluator(tuples, model, config.evaluator_training(),
                             training::TrainLog(out / "train_evaluator.jsonl"));
  save_evaluator(out / kEvaluatorCheckpoint, model);
  return kExitOk;
}

fs::path vocab_for(const std::string& vocab, const std::string& models) {
  if (!vocab.empty()) return vocab;
  if (!models.empty()) return fs::path(models) / kVocabFile;
  throw InputError("a vocabulary is required: pass --vocab or --models");
}

int cmd_generate(const Globals& g, const std::string& corpus_path, const std::string& vocab, const std::string& models) {
  auto config = resolve_config(g);
  auto v = load_vocab(vocab_for(vocab, models));
  auto m = load_models(models, config, v.size());
  auto corpus = read_corpus(corpus_path);
  fs::create_directories(g.out);
  std::ofstream out(fs::path(g.out) / "generations.jsonl", std::ios::binary);
  for (const auto& r : corpus.records) {
    auto gen = generator::generate(to_document(r, v), m.generator, config.generate_options());
    ordered_json claims = ordered_json::array();
    for (const auto& c : split_claims(gen.tokens, v)) claims.push_back(v.decode(c));
    out << ordered_json{{"id", r.id},
                        {"domain", chunker::kDomainNames[gen.domain.label]},
                        {"alpha", gen.domain.alpha},
                        {"claims", claims}}
               .dump()
        << '\n';
  }
  for (const auto& e : corpus.errors) spdlog::error("line {} skipped: {}", e.line, e.message);
  return corpus.errors.empty() ? kExitOk : kExitInputError;
}

int cmd_evaluate(const Globals& g, const std::string& ref, const std::string& gen, const std::string& vocab,
                 const std::string& models, const std::string& domain) {
  auto config = resolve_config(g);
  auto v = load_vocab(vocab_for(vocab, models));
  auto m = load_models(models, config, v.size());
  std::vector<double> alpha;
  if (!domain.empty()) {
    alpha.assign(chunker::kNumDomains, 0.0);
    try {
      alpha[chunker::domain_index(domain)] = 1.0;
    } catch (const std::exception&) {
      throw InputError("unknown domain '" + domain + "'");
    }
  }
  auto report = evaluator::evaluate_pair(v.encode(ref), v.encode(gen), m.evaluator, alpha);
  std::cout << evaluator::to_json(report) << '\n';
  return kExitOk;
}

int cmd_pipeline(const Globals& g, PipelineInputs inputs) {
  auto config = resolve_config(g);
  inputs.out = g.out;
  auto result = run_pipeline(inputs, config);
  std::cout << result.summary;
  if (!result.skipped.empty()) {
    spdlog::error("{} document(s) skipped", result.skipped.size());
    return kExitInputError;
  }
  return kExitOk;
}

int cmd_metrics(const Globals& g, const std::string& ref, const std::string& cand) {
  auto config = resolve_config(g);
  auto r = tc::split_tokens(ref);
  auto c = tc::split_tokens(cand);
  auto v = tc::Vocabulary::from_tokens([&] {
    auto all = r;
    all.insert(all.end(), c.begin(), c.end());
    return all;
  }());
  auto ri = v.encode_tokens(r);
  auto ci = v.encode_tokens(c);
  auto rouge = rouge_l(ri, ci, config.rouge_beta);
  std::cout << ordered_json{{"rouge_l", {{"precision", rouge.precision}, {"recall", rouge.recall}, {"f", rouge.f}}},
                            {"bleu", bleu(ri, ci, config.bleu_max_n)}}
                   .dump()
            << '\n';
  return kExitOk;
}

bool is_input_error(const std::exception& e) {
  return dynamic_cast<const InputError*>(&e) || dynamic_cast<const tc::TextError*>(&e) ||
         dynamic_cast<const chunker::ChunkError*>(&e) || dynamic_cast<const numerics::CheckpointError*>(&e) ||
         dynamic_cast<const evaluator::EvaluatorError*>(&e) || dynamic_cast<const generator::GeneratorError*>(&e) ||
         dynamic_cast<const similarity::SimilarityError*>(&e) || dynamic_cast<const training::TrainingError*>(&e) ||
         dynamic_cast<const fs::filesystem_error*>(&e);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"claimforge: patent claim similarity, generation and quality assessment"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides CLAIMFORGE_SEED and the config)");
  app.add_option("--config", g.config, "Flat key = value config file");
  app.add_option("--out", g.out, "Output directory");

  std::size_t size = 60, prior = kDefaultPriorArt;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--size", size, "Number of records (>= 15)");
  synth->add_option("--prior-art", prior, "Number of prior-art records");

  std::string corpus, prior_art, vocab, models, data;
  auto* chunk = app.add_subcommand("chunk", "Adaptive chunking of a corpus");
  chunk->add_option("--corpus", corpus, "Corpus JSONL")->required();
  chunk->add_option("--vocab", vocab, "Vocabulary file")->required();

  std::string claim, claim_file, doc, doc_file;
  auto* sim = app.add_subcommand("similarity", "Relationship-aware similarity of a claim and a document");
  sim->add_option("--claim", claim, "Claim text");
  sim->add_option("--claim-file", claim_file, "Claim text file");
  sim->add_option("--doc", doc, "Document text");
  sim->add_option("--doc-file", doc_file, "Document text file");
  sim->add_option("--vocab", vocab, "Vocabulary file")->required();
  sim->add_option("--models", models, "Checkpoint directory");

  auto* train_sim = app.add_subcommand("train-sim", "Train the similarity model on relations.jsonl");
  auto* train_gen = app.add_subcommand("train-gen", "Train the generator on corpus.jsonl");
  auto* train_eval = app.add_subcommand("train-eval", "Train the evaluator on tuples.jsonl");
  for (auto* s : {train_sim, train_gen, train_eval}) {
    s->add_option("--data", data, "Directory written by synth")->required();
  }

  auto* generate = app.add_subcommand("generate", "Generate claims for each corpus record");
  generate->add_option("--corpus", corpus, "Corpus JSONL")->required();
  generate->add_option("--vocab", vocab, "Vocabulary file");
  generate->add_option("--models", models, "Checkpoint directory");

  std::string ref, gen, domain;
  auto* evaluate = app.add_subcommand("evaluate", "Score a generated claim against a reference");
  evaluate->add_option("--ref", ref, "Reference claim text")->required();
  evaluate->add_option("--gen", gen, "Generated claim text")->required();
  evaluate->add_option("--vocab", vocab, "Vocabulary file");
  evaluate->add_option("--models", models, "Checkpoint directory");
  evaluate->add_option("--domain", domain, "Domain label for the margins");

  auto* pipe = app.add_subcommand("pipeline", "Run all three stages over a corpus");
  pipe->add_option("--corpus", corpus, "Corpus JSONL")->required();
  pipe->add_option("--prior-art", prior_art, "Prior-art JSONL");
  pipe->add_option("--models", models, "Checkpoint directory");
  pipe->add_option("--vocab", vocab, "Vocabulary file");

  std::string cand;
  auto* metrics = app.add_subcommand("metrics", "ROUGE-L and BLEU of two token sequences");
  metrics->add_option("--ref", ref, "Reference text")->required();
  metrics->add_option("--cand", cand, "Candidate text")->required();

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitInputError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitInputError;
  }
  if (seed_opt->count()) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, size, prior);
    if (*chunk) return cmd_chunk(g, corpus, vocab);
    if (*sim) return cmd_similarity(g, claim, claim_file, doc, doc_file, vocab, models);
    if (*train_sim) return cmd_train_sim(g, data);
    if (*train_gen) return cmd_train_gen(g, data);
    if (*train_eval) return cmd_train_eval(g, data);
    if (*generate) return cmd_generate(g, corpus, vocab, models);
    if (*evaluate) return cmd_evaluate(g, ref, gen, vocab, models, domain);
    if (*pipe) return cmd_pipeline(g, {corpus, prior_art, models, vocab, {}});
    if (*metrics) return cmd_metrics(g, ref, cand);
  } catch (const std::exception& e) {
    if (is_input_error(e)) {
      spdlog::error("{}", e.what());
      return kExitInputError;
    }
    spdlog::critical("internal error: {}", e.what());
    return kExitInternalError;
  }
  return kExitInputError;
}

}  // namespace claimforge::pipeline

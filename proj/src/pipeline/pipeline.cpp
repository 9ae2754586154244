#include "claimforge/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "claimforge/chunker/chunker.hpp"
#include "claimforge/evaluator/evaluator.hpp"
#include "claimforge/generator/generate.hpp"
#include "claimforge/numerics/ops.hpp"
#include "claimforge/pipeline/metrics.hpp"
#include "claimforge/similarity/similarity.hpp"
#include "claimforge/training/curriculum.hpp"

namespace claimforge::pipeline {

namespace nx = numerics;
namespace tc = textcore;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
using numerics::Tensor;

namespace {

constexpr std::size_t kReferencePrefix = 128;

std::size_t worker_count(const PipelineConfig& config, std::size_t jobs) {
  std::size_t w = config.workers;
  if (w == 0) w = std::min<std::size_t>(8, std::max(1u, std::thread::hardware_concurrency()));
  return std::max<std::size_t>(1, std::min(w, jobs));
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each slot gets either
// nothing (success) or the error message of the exception fn threw.
std::vector<std::optional<std::string>> parallel_for(std::size_t n, std::size_t workers,
                                                     const std::function<void(std::size_t)>& fn) {
  std::vector<std::optional<std::string>> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    nx::NoGradGuard no_grad;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    run();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return errors;
}

struct ChunkSet {
  std::string doc_id;
  std::vector<chunker::Chunk> chunks;
  std::vector<similarity::ProjectedChunk> projected;
  std::size_t size = 0;
  double kappa = 0.0;
};

ChunkSet chunk_document(const chunker::Document& doc, const SimilarityModel& model, const PipelineConfig& config,
                        bool claim_side) {
  ChunkSet set;
  set.doc_id = doc.id;
  set.kappa = chunker::complexity(doc);
  set.size = chunker::target_size(set.kappa, config.chunk_centering, config.chunk_scale);
  set.chunks = chunker::chunk(doc, set.size);
  const std::size_t limit = model.encoder.config.max_seq_len;
  for (auto& c : set.chunks) {
    std::span<const std::size_t> ids(doc.tokens.data() + c.start_token, std::min(c.size(), limit));
    Tensor states = tc::encode_sequence(ids, model.encoder);
    c.embedding = nx::mean_rows(states).to_vector();
    set.projected.push_back(claim_side ? similarity::project_claim(states, model.heads)
                                       : similarity::project_doc(states, model.heads));
  }
  return set;
}

std::string chunk_id(const std::string& doc_id, std::size_t i) { return doc_id + "#" + std::to_string(i); }

struct Timing {
  double start = 0.0;
  double end = 0.0;
};

struct DocState {
  const CorpusRecord* record = nullptr;
  chunker::Document doc;
  ordered_json stage1, stage2, stage3, metrics;
  generator::Generation generation;
  std::vector<tc::TokenIds> claims;
  std::optional<std::string> error;
  std::array<Timing, 3> timing{};
  double top_similarity = 0.0;
  bool has_similarity = false;
  double mean_overall = 0.0;
};

double elapsed_ms(Clock::time_point origin) {
  return std::chrono::duration<double, std::milli>(Clock::now() - origin).count();
}

void stage1(DocState& s, const std::vector<ChunkSet>& prior, const Models& models, const tc::Vocabulary& vocab,
            const PipelineConfig& config) {
  s.doc = to_document(*s.record, vocab);
  auto set = chunk_document(s.doc, models.similarity, config, true);
  std::vector<similarity::SimilarityReport> reports;
  for (std::size_t i = 0; i < set.chunks.size(); ++i) {
    for (const auto& p : prior) {
      for (std::size_t j = 0; j < p.chunks.size(); ++j) {
        auto fwd = similarity::similarity_forward(set.projected[i], p.projected[j], models.similarity.heads);
        std::array<double, similarity::kNumHeads> scores{}, weights{};
        std::copy_n(fwd.scores.data().begin(), similarity::kNumHeads, scores.begin());
        std::copy_n(fwd.weights.data().begin(), similarity::kNumHeads, weights.begin());
        reports.push_back(similarity::assemble_report(chunk_id(s.doc.id, i), chunk_id(p.doc_id, j), scores, weights));
      }
    }
  }
  const std::size_t scored = reports.size();
  std::stable_sort(reports.begin(), reports.end(),
                   [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
  if (reports.size() > config.top_k) reports.resize(config.top_k);
  if (!reports.empty()) {
    s.has_similarity = true;
    s.top_similarity = reports.front().similarity;
  }
  ordered_json chunks = ordered_json::array();
  for (std::size_t i = 0; i < set.chunks.size(); ++i) {
    const auto& c = set.chunks[i];
    chunks.push_back({{"id", chunk_id(s.doc.id, i)},
                      {"start", c.start_token},
                      {"end", c.end_token},
                      {"hard_split", c.hard_split}});
  }
  ordered_json top = ordered_json::array();
  for (const auto& r : reports) top.push_back(ordered_json::parse(similarity::to_json_line(r)));
  s.stage1 = {{"tokens", s.doc.tokens.size()},
              {"claim_count", s.doc.claim_count},
              {"figure_count", s.doc.figure_count},
              {"complexity", set.kappa},
              {"chunk_size", set.size},
              {"chunks", chunks},
              {"pairs_scored", scored},
              {"top_k", top}};
}

void stage2(DocState& s, const Models& models, const tc::Vocabulary& vocab, const PipelineConfig& config) {
  auto options = config.generate_options();
  options.seed = nx::Rng(config.seed).substream("sampling").substream(s.doc.id).next_u64();
  s.generation = generator::generate(s.doc, models.generator, options);
  s.claims = split_claims(s.generation.tokens, vocab);
  const auto schedule = config.schedule();
  const double t = static_cast<double>(models.generator_steps);
  const auto& d = s.generation.domain;
  ordered_json alpha;
  for (std::size_t k = 0; k < chunker::kNumDomains; ++k) alpha[chunker::kDomainNames[k]] = d.alpha[k];
  ordered_json claims = ordered_json::array();
  for (const auto& c : s.claims) claims.push_back(vocab.decode(c));
  s.stage2 = {{"domain_mixture", alpha},
              {"domain", chunker::kDomainNames[d.label]},
              {"confidence", d.confidence},
              {"step", models.generator_steps},
              {"tau", training::curriculum_progress(t, schedule)},
              {"level", training::difficulty_level(t, schedule)},
              {"generated_tokens", s.generation.tokens.size()},
              {"stopped_at_eos", s.generation.stopped_at_eos},
              {"claims", claims}};
}

void stage3(DocState& s, const Models& models, const tc::Vocabulary& vocab, const PipelineConfig& config) {
  std::vector<tc::TokenIds> refs;
  for (const auto& c : s.record->claims) refs.push_back(vocab.encode(c));
  tc::TokenIds joined = vocab.encode(claims_text(s.record->claims));
  tc::TokenIds prefix(s.doc.tokens.begin(), s.doc.tokens.begin() + std::min(kReferencePrefix, s.doc.tokens.size()));
  std::span<const double> alpha(s.generation.domain.alpha);
  s.stage3 = ordered_json::array();
  double overall_sum = 0.0;
  for (std::size_t j = 0; j < s.claims.size(); ++j) {
    const tc::TokenIds* ref = &prefix;
    std::string ref_name = "description";
    if (j < refs.size() && !refs[j].empty()) {
      ref = &refs[j];
      ref_name = "claim " + std::to_string(j + 1);
    } else if (!joined.empty()) {
      ref = &joined;
      ref_name = "all claims";
    }
    auto q = evaluator::evaluate_pair(*ref, s.claims[j], models.evaluator, alpha);
    ordered_json scores, weights, margins, display;
    for (std::size_t k = 0; k < evaluator::kNumAspects; ++k) {
      scores[evaluator::kAspectNames[k]] = q.aspect_scores[k];
      weights[evaluator::kAspectNames[k]] = q.aspect_weights[k];
      margins[evaluator::kAspectNames[k]] = q.margins[k];
      display[evaluator::kAspectNames[k]] = q.display_scores[k];
    }
    overall_sum += q.overall;
    s.stage3.push_back({{"claim", j + 1},
                        {"reference", ref_name},
                        {"scores", scores},
                        {"weights", weights},
                        {"overall", q.overall},
                        {"display", display},
                        {"margins", margins}});
  }
  if (!s.claims.empty()) s.mean_overall = overall_sum / static_cast<double>(s.claims.size());

  const auto& gen = s.generation.tokens;
  auto rouge = rouge_l(joined, gen, config.rouge_beta);
  ordered_json cosine = nullptr;
  if (!joined.empty() && !gen.empty()) {
    const std::size_t limit = models.similarity.encoder.config.max_seq_len;
    auto pooled = [&](const tc::TokenIds& ids) {
      std::span<const std::size_t> v(ids.data(), std::min(ids.size(), limit));
      return nx::mean_rows(tc::encode_sequence(v, models.similarity.encoder));
    };
    cosine = nx::cosine(pooled(joined), pooled(gen)).item();
  }
  s.metrics = {{"rouge_l", {{"precision", rouge.precision}, {"recall", rouge.recall}, {"f", rouge.f}}},
               {"bleu", bleu(joined, gen, config.bleu_max_n)},
               {"embedding_cosine", cosine}};
}

std::string summary_table(const std::vector<DocState>& docs, const std::vector<SkippedDocument>& skipped) {
  std::ostringstream os;
  std::size_t processed = 0;
  for (const auto& d : docs) processed += !d.error;
  os << "documents processed: " << processed << "\n";
  os << "documents skipped:   " << skipped.size() << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-11s %5s %6s %8s %10s\n", "id", "domain", "level", "claims", "overall",
                "top_sim");
  os << line;
  for (const auto& d : docs) {
    if (d.error) continue;
    char top[32] = "-";
    if (d.has_similarity) std::snprintf(top, sizeof top, "%.6f", d.top_similarity);
    std::snprintf(line, sizeof line, "%-16s %-11s %5d %6zu %8.4f %10s\n", d.doc.id.c_str(),
                  d.stage2["domain"].get<std::string>().c_str(), d.stage2["level"].get<int>(), d.claims.size(),
                  d.mean_overall, top);
    os << line;
  }
  if (!skipped.empty()) {
    os << "\nskipped:\n";
    for (const auto& s : skipped) os << "  " << s.id << ": " << s.reason << "\n";
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

PipelineResult run_pipeline(const CorpusFile& corpus, const std::vector<CorpusRecord>& prior_art,
                            const Models& models, const tc::Vocabulary& vocab, const PipelineConfig& config) {
  config.validate();
  const auto origin = Clock::now();
  nx::NoGradGuard no_grad;

  std::vector<ChunkSet> prior(prior_art.size());
  auto prior_errors = parallel_for(prior_art.size(), worker_count(config, prior_art.size()), [&](std::size_t i) {
    prior[i] = chunk_document(to_document(prior_art[i], vocab), models.similarity, config, false);
  });
  std::vector<ChunkSet> usable;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior_errors[i]) {
      spdlog::warn("prior-art document {} skipped: {}", prior_art[i].id, *prior_errors[i]);
      continue;
    }
    usable.push_back(std::move(prior[i]));
  }

  std::vector<DocState> docs(corpus.records.size());
  for (std::size_t i = 0; i < docs.size(); ++i) docs[i].record = &corpus.records[i];

  auto timed = [&](DocState& d, std::size_t stage, const std::function<void()>& fn) {
    d.timing[stage].start = elapsed_ms(origin);
    fn();
    d.timing[stage].end = elapsed_ms(origin);
  };
  auto note = [&](std::vector<std::optional<std::string>> errors) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (errors[i] && !docs[i].error) docs[i].error = errors[i];
    }
  };

  note(parallel_for(docs.size(), worker_count(config, docs.size()), [&](std::size_t i) {
    timed(docs[i], 0, [&] { stage1(docs[i], usable, models, vocab, config); });
  }));
  for (auto& d : docs) {
    if (d.error) continue;
    try {
      timed(d, 1, [&] { stage2(d, models, vocab, config); });
    } catch (const std::exception& e) {
      d.error = e.what();
    }
  }
  note(parallel_for(docs.size(), worker_count(config, docs.size()), [&](std::size_t i) {
    if (docs[i].error) return;
    timed(docs[i], 2, [&] { stage3(docs[i], models, vocab, config); });
  }));

  PipelineResult result;
  for (const auto& e : corpus.errors) {
    std::string id = e.id.empty() ? "line " + std::to_string(e.line) : e.id;
    spdlog::error("corpus record {} skipped: {}", id, e.message);
    result.skipped.push_back({id, e.message});
  }
  for (const auto& d : docs) {
    if (d.error) {
      spdlog::error("document {} skipped: {}", d.record->id, *d.error);
      result.skipped.push_back({d.record->id, *d.error});
      continue;
    }
    ordered_json j;
    j["id"] = d.record->id;
    if (d.record->domain) j["domain_label"] = *d.record->domain;
    if (d.record->jurisdiction) j["jurisdiction"] = *d.record->jurisdiction;
    j["similarity"] = d.stage1;
    j["generation"] = d.stage2;
    j["quality"] = d.stage3;
    j["metrics"] = d.metrics;
    result.report_lines.push_back(j.dump());
    ordered_json t;
    t["id"] = d.record->id;
    const char* names[] = {"similarity", "generation", "quality"};
    for (std::size_t k = 0; k < 3; ++k) t[names[k]] = {{"start_ms", d.timing[k].start}, {"end_ms", d.timing[k].end}};
    result.timing_lines.push_back(t.dump());
    ++result.processed;
  }
  result.summary = summary_table(docs, result.skipped);
  return result;
}

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  config.validate();
  auto corpus = read_corpus(inputs.corpus);
  std::vector<CorpusRecord> prior;
  if (!inputs.prior_art.empty()) {
    auto p = read_corpus(inputs.prior_art);
    for (const auto& e : p.errors) spdlog::warn("prior-art line {} skipped: {}", e.line, e.message);
    prior = std::move(p.records);
  }
  tc::Vocabulary vocab;
  std::filesystem::path vocab_path = inputs.vocab;
  if (vocab_path.empty() && !inputs.models.empty() && std::filesystem::exists(inputs.models / kVocabFile)) {
    vocab_path = inputs.models / kVocabFile;
  }
  if (!vocab_path.empty()) {
    try {
      vocab = tc::Vocabulary::load(vocab_path);
    } catch (const tc::TextError& e) {
      throw InputError(e.what());
    }
  } else {
    spdlog::warn("no vocabulary given; building one from the pipeline inputs");
    std::vector<std::string> texts;
    for (const auto* set : {&corpus.records, &prior}) {
      for (const auto& r : *set) {
        texts.push_back(r.description);
        texts.push_back(claims_text(r.claims));
      }
    }
    vocab = tc::Vocabulary::build(texts, config.vocab_cap);
  }
  auto models = load_models(inputs.models, config, vocab.size());
  auto result = run_pipeline(corpus, prior, models, vocab, config);

  std::filesystem::create_directories(inputs.out);
  std::string report, timings;
  for (const auto& l : result.report_lines) report += l + "\n";
  for (const auto& l : result.timing_lines) timings += l + "\n";
  write_text(inputs.out / kReportFile, report);
  write_text(inputs.out / kTimingsFile, timings);
  write_text(inputs.out / kSummaryFile, result.summary);
  return result;
}

}  // namespace claimforge::pipeline

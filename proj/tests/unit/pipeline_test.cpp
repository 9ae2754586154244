#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "claimforge/numerics/rng.hpp"
#include "claimforge/pipeline/cli.hpp"
#include "claimforge/pipeline/metrics.hpp"
#include "claimforge/pipeline/pipeline.hpp"
#include "claimforge/pipeline/synth.hpp"
#include "claimforge/textcore/tokenizer.hpp"
#include "claimforge/training/curriculum.hpp"

namespace cp = claimforge::pipeline;
namespace fs = std::filesystem;
using claimforge::numerics::Rng;
using json = nlohmann::ordered_json;
using Ids = std::vector<std::size_t>;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("claimforge_pipeline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Longest common subsequence by enumerating every subsequence of `b`.
std::size_t lcs_bruteforce(const Ids& a, const Ids& b) {
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << b.size()); ++mask) {
    Ids sub;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (mask >> i & 1) sub.push_back(b[i]);
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size() && j < sub.size(); ++i) j += a[i] == sub[j];
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

std::unordered_map<std::string, int> grams(const Ids& s, std::size_t n) {
  std::unordered_map<std::string, int> m;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) key += std::to_string(s[i + k]) + ",";
    ++m[key];
  }
  return m;
}

double bleu_oracle(const Ids& ref, const Ids& cand, std::size_t max_n) {
  if (ref.empty() || cand.empty()) return 0.0;
  double prod = 1.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto c = grams(cand, n), r = grams(ref, n);
    int matches = 0, total = 0;
    for (auto& [g, k] : c) {
      total += k;
      matches += std::min(k, r.count(g) ? r[g] : 0);
    }
    if (n == 1 && matches == 0) return 0.0;
    prod *= matches == 0 ? 1.0 / (total + 1) : static_cast<double>(matches) / total;
  }
  double bp = cand.size() > ref.size() ? 1.0 : std::exp(1.0 - static_cast<double>(ref.size()) / cand.size());
  return bp * std::pow(prod, 1.0 / static_cast<double>(max_n));
}

Ids random_ids(Rng& rng, std::size_t min_len, std::size_t max_len, std::size_t alphabet) {
  Ids v(min_len + rng.below(max_len - min_len + 1));
  for (auto& x : v) x = rng.below(alphabet);
  return v;
}

cp::PipelineConfig small_config() {
  cp::PipelineConfig c;
  c.model_dim = 32;
  c.num_heads = 4;
  c.head_dim = 8;
  c.num_layers = 1;
  c.gen_max_len = 24;
  c.workers = 2;
  return c;
}

// Checkpoints store 32-bit floats.
std::vector<double> as_float(std::vector<double> v) {
  for (auto& x : v) x = static_cast<float>(x);
  return v;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "claimforge");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cp::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Metrics, RougeExamples) {
  Ids x{1, 2, 3, 4};
  auto same = cp::rouge_l(x, x);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f, 1.0);
  auto none = cp::rouge_l(x, Ids{5, 6});
  EXPECT_EQ(none.f, 0.0);
  EXPECT_EQ(none.precision, 0.0);
  auto r = cp::rouge_l(x, Ids{1, 3, 4});
  EXPECT_EQ(r.recall, 0.75);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_NEAR(r.f, 0.835616438356164383561643835616, 1e-15);
  EXPECT_EQ(cp::rouge_l({}, x).f, 0.0);
  EXPECT_EQ(cp::rouge_l(x, {}).f, 0.0);
}

TEST(Metrics, BleuExamples) {
  Ids x{1, 2, 3, 4, 5};
  EXPECT_EQ(cp::bleu(x, x), 1.0);
  EXPECT_LT(cp::bleu(x, Ids{6, 7, 8, 9, 10}), 0.05);
  EXPECT_EQ(cp::bleu({}, x), 0.0);
  Ids ref{1, 2, 3, 4, 5, 6, 7, 8}, cand{1, 2, 3, 9, 5, 6, 7};
  EXPECT_NEAR(cp::bleu(ref, cand), bleu_oracle(ref, cand, 4), 1e-10);
}

TEST(Metrics, RandomPairsMatchOracles) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Ids a = random_ids(rng, 0, 10, 5), b = random_ids(rng, 0, 10, 5);
    std::size_t lcs = lcs_bruteforce(a, b);
    ASSERT_EQ(cp::lcs_length(a, b), lcs);
    auto r = cp::rouge_l(a, b);
    if (lcs > 0) {
      double R = static_cast<double>(lcs) / a.size(), P = static_cast<double>(lcs) / b.size();
      ASSERT_NEAR(r.f, 2.44 * P * R / (R + 1.44 * P), 1e-10);
    } else {
      ASSERT_EQ(r.f, 0.0);
    }
    ASSERT_NEAR(cp::bleu(a, b), bleu_oracle(a, b, 4), 1e-10);
  }
}

TEST(Metrics, SelfScoresAreOne) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    Ids x = random_ids(rng, 4, 30, 20);
    ASSERT_EQ(cp::rouge_l(x, x).f, 1.0);
    ASSERT_EQ(cp::bleu(x, x), 1.0);
  }
}

TEST(Corpus, RecordRoundTripAndErrors) {
  cp::CorpusRecord r{"d1", "A widget.", {"A widget comprising a gear."}, "mechanical", "US", 2};
  auto back = cp::parse_record(cp::to_json_line(r));
  EXPECT_EQ(back.id, "d1");
  EXPECT_EQ(back.claims, r.claims);
  EXPECT_EQ(back.figure_count, 2u);
  EXPECT_THROW(cp::parse_record(R"({"id":"x","description":"  "})"), cp::InputError);
  EXPECT_THROW(cp::parse_record(R"({"description":"text"})"), cp::InputError);
  EXPECT_THROW(cp::parse_record(R"({"id":"x","description":"t","domain":"astro"})"), cp::InputError);
  EXPECT_THROW(cp::parse_record("{not json"), cp::InputError);

  auto dir = scratch("corpus");
  std::ofstream(dir / "c.jsonl") << cp::to_json_line(r) << "\n{broken\n" << cp::to_json_line(r) << "\n";
  auto file = cp::read_corpus(dir / "c.jsonl");
  EXPECT_EQ(file.records.size(), 1u);
  ASSERT_EQ(file.errors.size(), 2u);
  EXPECT_EQ(file.errors[0].line, 2u);
  EXPECT_EQ(file.errors[1].id, "d1");
  EXPECT_THROW(cp::read_corpus(dir / "missing.jsonl"), cp::InputError);
}

TEST(Corpus, ClaimsTextAndSplitting) {
  std::vector<std::string> claims{"A device comprising a gear.", "The device of claim 1, wherein the gear is steel."};
  EXPECT_EQ(cp::claims_text(claims),
            "1. A device comprising a gear. 2. The device of claim 1, wherein the gear is steel.");
  EXPECT_EQ(cp::dependent_claim_count(claims), 1u);
  auto vocab = claimforge::textcore::Vocabulary::build({cp::claims_text(claims)});
  auto parts = cp::split_claims(vocab.encode(cp::claims_text(claims)), vocab);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(vocab.decode(parts[0]), vocab.decode(vocab.encode(claims[0])));
  EXPECT_EQ(vocab.decode(parts[1]), vocab.decode(vocab.encode(claims[1])));
  EXPECT_EQ(cp::split_claims(vocab.encode("gear steel"), vocab).size(), 1u);
  EXPECT_TRUE(cp::split_claims({}, vocab).empty());
}

TEST(Config, DefaultsRoundTripAndErrors) {
  cp::PipelineConfig c;
  EXPECT_EQ(c.model_dim, 512u);
  EXPECT_EQ(c.num_heads, 8u);
  EXPECT_EQ(c.batch_size, 4u);
  EXPECT_EQ(c.lr, 5e-5);
  EXPECT_EQ(c.weight_decay, 0.01);
  EXPECT_EQ(c.top_k, 5u);
  EXPECT_EQ(c.base_margin, 0.3);
  EXPECT_EQ(c.curriculum_gamma, 0.01);
  EXPECT_EQ(c.curriculum_t0, 5000.0);
  EXPECT_EQ(c.rouge_beta, 1.2);
  EXPECT_EQ(cp::to_text(cp::parse_config(cp::to_text(c))), cp::to_text(c));
  auto p = cp::parse_config("# comment\n\nmodel_dim = 64\nhead_dim=8\nverbatim_mode = true\nlr = 1e-3\n");
  EXPECT_EQ(p.model_dim, 64u);
  EXPECT_TRUE(p.verbatim_mode);
  EXPECT_EQ(p.lr, 1e-3);
  EXPECT_THROW(cp::parse_config("colour = blue\n"), cp::InputError);
  EXPECT_THROW(cp::parse_config("model_dim = big\n"), cp::InputError);
  EXPECT_THROW(cp::parse_config("model_dim = 100\n"), cp::InputError);
  EXPECT_THROW(cp::parse_config("gen_mode = beam\n"), cp::InputError);
}

TEST(Synth, SizesAndDeterminism) {
  EXPECT_THROW(cp::synth_corpus(0, 14), cp::InputError);
  auto c = cp::synth_corpus(0, 60);
  std::map<std::string, int> per_domain;
  for (const auto& r : c.records) {
    ++per_domain[*r.domain];
    EXPECT_GE(r.claims.size(), 1u);
    EXPECT_LE(r.claims.size(), 4u);
    EXPECT_EQ(claimforge::chunker::count_figures(r.description), *r.figure_count);
  }
  for (const auto* name : claimforge::chunker::kDomainNames) EXPECT_EQ(per_domain[name], 12);
  EXPECT_EQ(c.relations.size(), 240u);
  for (const auto& t : c.tuples) EXPECT_NE(t.better, t.worse);

  auto a = scratch("synth_a"), b = scratch("synth_b");
  cp::write_synth(a, c);
  cp::write_synth(b, cp::synth_corpus(0, 60));
  for (const char* f : {"corpus.jsonl", "prior_art.jsonl", "relations.jsonl", "tuples.jsonl", "domains.json",
                        "vocab.txt"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "corpus.jsonl"), cp::to_json_line(cp::synth_corpus(1, 60).records[0]));
}

TEST(Synth, DomainVocabularyOverlap) {
  auto dir = scratch("pools");
  auto c = cp::synth_corpus(0, 60);
  cp::write_synth(dir, c);
  auto pools = json::parse(slurp(dir / "domains.json"));
  std::vector<std::set<std::string>> sets;
  for (const auto* name : claimforge::chunker::kDomainNames) {
    auto words = pools[name].get<std::vector<std::string>>();
    sets.emplace_back(words.begin(), words.end());
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      std::size_t shared = 0;
      for (const auto& w : sets[i]) shared += sets[j].count(w);
      EXPECT_LT(shared, 0.2 * static_cast<double>(std::min(sets[i].size(), sets[j].size())));
    }
  }
  // Emitted records only use pool words of their own domain.
  for (const auto& r : c.records) {
    std::size_t d = claimforge::chunker::domain_index(*r.domain);
    for (const auto& tok : claimforge::textcore::split_tokens(r.description + " " + cp::claims_text(r.claims))) {
      for (std::size_t o = 0; o < sets.size(); ++o) {
        if (o != d) {
          ASSERT_EQ(sets[o].count(tok), 0u) << r.id << " uses " << tok;
        }
      }
    }
  }
}

TEST(Synth, BucketsMatchSortOracle) {
  auto c = cp::synth_corpus(0, 60);
  auto vocab = claimforge::textcore::Vocabulary::build(cp::corpus_texts(c));
  std::vector<claimforge::generator::GenerationSample> samples;
  for (const auto& r : c.records) samples.push_back(cp::to_generation_sample(r, vocab));
  auto keys = claimforge::generator::difficulty_keys(samples);
  auto buckets = claimforge::training::bucket_corpus(keys);
  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(keys[a].key, keys[a].id) < std::tie(keys[b].key, keys[b].id);
  });
  for (std::size_t l = 0; l < 3; ++l) {
    ASSERT_EQ(buckets[l].members.size(), 20u);
    std::set<std::size_t> got(buckets[l].members.begin(), buckets[l].members.end());
    std::set<std::size_t> want(order.begin() + 20 * l, order.begin() + 20 * (l + 1));
    EXPECT_EQ(got, want);
  }
}

TEST(Models, CheckpointRoundTripAndMismatch) {
  auto dir = scratch("models");
  auto config = small_config();
  auto sim = cp::init_similarity(config, 40);
  auto gen = cp::init_generator(config, 40);
  auto ev = cp::init_evaluator(config, 40);
  cp::save_similarity(dir / cp::kSimilarityCheckpoint, sim);
  cp::save_generator(dir / cp::kGeneratorCheckpoint, gen, 123);
  cp::save_evaluator(dir / cp::kEvaluatorCheckpoint, ev);
  auto m = cp::load_models(dir, config, 40);
  EXPECT_EQ(m.generator_steps, 123u);
  EXPECT_EQ(m.similarity.encoder.token_embedding.to_vector(), as_float(sim.encoder.token_embedding.to_vector()));
  EXPECT_EQ(m.evaluator.heads.queries.to_vector(), as_float(ev.heads.queries.to_vector()));

  auto wide = config;
  wide.model_dim = 64;
  wide.head_dim = 16;
  try {
    cp::load_models(dir, wide, 40);
    FAIL();
  } catch (const cp::InputError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("model_dim 32"), std::string::npos) << msg;
    EXPECT_NE(msg.find("model_dim 64"), std::string::npos) << msg;
  }
  EXPECT_THROW(cp::load_models(dir, config, 41), cp::InputError);
}

class PipelineRun : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = cp::synth_corpus(3, 15, 2);
    corpus_.records.resize(4);
    vocab_ = claimforge::textcore::Vocabulary::build(cp::corpus_texts(corpus_));
    models_ = cp::load_models({}, config_, vocab_.size());
  }
  cp::PipelineResult run(const cp::CorpusFile& file, const std::vector<cp::CorpusRecord>& prior) {
    return cp::run_pipeline(file, prior, models_, vocab_, config_);
  }
  cp::PipelineConfig config_ = small_config();
  cp::SynthCorpus corpus_;
  claimforge::textcore::Vocabulary vocab_;
  cp::Models models_;
};

TEST_F(PipelineRun, StagesScoresAndOrdering) {
  auto result = run({corpus_.records, {}}, corpus_.prior_art);
  ASSERT_EQ(result.processed, 4u);
  EXPECT_TRUE(result.skipped.empty());
  std::set<std::string> ids;
  for (const auto& r : corpus_.records) ids.insert(r.id);
  for (std::size_t i = 0; i < result.report_lines.size(); ++i) {
    auto j = json::parse(result.report_lines[i]);
    EXPECT_TRUE(ids.count(j["id"].get<std::string>()));
    auto keys = std::vector<std::string>();
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    auto pos = [&](const char* k) { return std::find(keys.begin(), keys.end(), k) - keys.begin(); };
    EXPECT_LT(pos("similarity"), pos("generation"));
    EXPECT_LT(pos("generation"), pos("quality"));
    EXPECT_LE(j["similarity"]["top_k"].size(), 5u);
    EXPECT_EQ(j["quality"].size(), j["generation"]["claims"].size());
    for (const auto& q : j["quality"]) {
      ASSERT_EQ(q["scores"].size(), 5u);
      for (const auto& [name, s] : q["scores"].items()) {
        EXPECT_GT(s.get<double>(), 0.0);
        EXPECT_LT(s.get<double>(), 1.0);
      }
    }
    auto t = json::parse(result.timing_lines[i]);
    EXPECT_LE(t["similarity"]["end_ms"].get<double>(), t["generation"]["start_ms"].get<double>());
    EXPECT_LE(t["generation"]["end_ms"].get<double>(), t["quality"]["start_ms"].get<double>());
  }
}

TEST_F(PipelineRun, EmptyPriorArt) {
  auto result = run({corpus_.records, {}}, {});
  ASSERT_EQ(result.processed, 4u);
  for (const auto& line : result.report_lines) {
    auto j = json::parse(line);
    EXPECT_EQ(j["similarity"]["pairs_scored"], 0);
    EXPECT_TRUE(j["similarity"]["top_k"].empty());
    EXPECT_TRUE(j.contains("generation"));
    EXPECT_TRUE(j["quality"].is_array());
  }
}

TEST_F(PipelineRun, DeterministicAcrossRunsAndWorkers) {
  auto a = run({corpus_.records, {}}, corpus_.prior_art);
  config_.workers = 1;
  auto b = run({corpus_.records, {}}, corpus_.prior_art);
  EXPECT_EQ(a.report_lines, b.report_lines);
  EXPECT_EQ(a.summary, b.summary);
}

TEST_F(PipelineRun, FailureIsolation) {
  auto dir = scratch("isolation");
  cp::write_corpus(dir / "clean.jsonl", corpus_.records);
  auto lines = corpus_.records;
  std::ofstream bad(dir / "bad.jsonl");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    bad << (i == 2 ? std::string("{\"id\": \"doc-002\", \"description\": 7}") : cp::to_json_line(lines[i])) << "\n";
  }
  bad.close();
  auto clean = run(cp::read_corpus(dir / "clean.jsonl"), corpus_.prior_art);
  auto dirty = run(cp::read_corpus(dir / "bad.jsonl"), corpus_.prior_art);
  ASSERT_EQ(dirty.skipped.size(), 1u);
  EXPECT_EQ(dirty.skipped[0].id, "doc-002");
  ASSERT_EQ(dirty.report_lines.size(), 3u);
  std::vector<std::string> expected = clean.report_lines;
  expected.erase(expected.begin() + 2);
  EXPECT_EQ(dirty.report_lines, expected);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({}), cp::kExitInputError);
  EXPECT_EQ(cli({"frobnicate"}), cp::kExitInputError);
  EXPECT_EQ(cli({"synth", "--bogus"}), cp::kExitInputError);
  auto dir = scratch("cli");
  EXPECT_EQ(cli({"synth", "--size", "10", "--out", (dir / "tiny").string()}), cp::kExitInputError);
  EXPECT_EQ(cli({"metrics", "--ref", "a b c d", "--cand", "a c d"}), cp::kExitOk);
  EXPECT_EQ(cli({"pipeline", "--corpus", (dir / "missing.jsonl").string(), "--out", dir.string()}),
            cp::kExitInputError);
}

TEST(Cli, ConfigCheckpointMismatch) {
  auto dir = scratch("cli_mismatch");
  auto config = small_config();
  std::ofstream(dir / "small.conf") << cp::to_text(config);
  ASSERT_EQ(cli({"synth", "--size", "15", "--out", (dir / "data").string()}), cp::kExitOk);
  auto vocab = claimforge::textcore::Vocabulary::load(dir / "data" / "vocab.txt");
  fs::create_directories(dir / "models");
  fs::copy_file(dir / "data" / "vocab.txt", dir / "models" / "vocab.txt");
  cp::save_evaluator(dir / "models" / cp::kEvaluatorCheckpoint, cp::init_evaluator(config, vocab.size()));
  EXPECT_EQ(cli({"evaluate", "--ref", "a gear", "--gen", "a gear", "--models", (dir / "models").string(), "--config",
                 (dir / "small.conf").string()}),
            cp::kExitOk);
  // Default config asks for model_dim 512 against a 32-wide checkpoint.
  EXPECT_EQ(cli({"evaluate", "--ref", "a gear", "--gen", "a gear", "--models", (dir / "models").string()}),
            cp::kExitInputError);
}

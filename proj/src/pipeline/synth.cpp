#include "claimforge/pipeline/synth.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "claimforge/numerics/rng.hpp"
#include "claimforge/textcore/tokenizer.hpp"

namespace claimforge::pipeline {

using nlohmann::ordered_json;

namespace {

const std::array<const char*, chunker::kNumDomains> kApplications = {
    "heavy industrial machinery", "power distribution grids", "distributed computing platforms",
    "specialty material manufacturing", "therapeutic diagnostics"};

const std::array<const char*, 4> kViews = {"side", "top", "sectional", "perspective"};

template <typename T>
const T& pick(const std::vector<T>& v, numerics::Rng& rng) {
  return v[rng.below(v.size())];
}

std::vector<std::string> pick_distinct(const std::vector<std::string>& pool, std::size_t n, numerics::Rng& rng) {
  std::vector<std::string> copy = pool;
  rng.shuffle(copy);
  copy.resize(std::min(n, copy.size()));
  return copy;
}

std::string article(const std::string& word) {
  return std::string("aeiou").find(word[0]) != std::string::npos ? "an" : "a";
}

std::string with_article(const std::string& word) { return article(word) + " " + word; }

struct Draft {
  std::string subject;
  std::vector<std::string> comps;
};

std::string independent_claim(const Draft& d) {
  return with_article(d.subject) + " comprising " + with_article(d.comps[0]) + ", " + with_article(d.comps[1]) +
         " coupled to the " + d.comps[0] + ", and " + with_article(d.comps[2]) + " configured to support the " +
         d.comps[1] + ".";
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

CorpusRecord make_record(const std::string& id, std::size_t domain, numerics::Rng rng) {
  const auto& pool = domain_pools()[domain];
  Draft d{pick(pool.subjects, rng), pick_distinct(pool.components, 7, rng)};
  const std::size_t n_claims = 1 + rng.below(4);
  const std::size_t n_figures = 1 + rng.below(3);

  std::vector<std::string> sentences;
  sentences.push_back("The present disclosure relates to " + with_article(d.subject) + " for " +
                      kApplications[domain] + ".");
  for (std::size_t i = 0; i < d.comps.size(); ++i) {
    const auto& a = d.comps[i];
    const auto& b = d.comps[(i + 1) % d.comps.size()];
    const auto& c = d.comps[(i + 3) % d.comps.size()];
    switch (rng.below(4)) {
      case 0:
        sentences.push_back("In one embodiment, the " + a + " is arranged adjacent to the " + b + ".");
        break;
      case 1:
        sentences.push_back("The " + a + " may be connected to the " + b + " by " + with_article(c) + ".");
        break;
      case 2:
        sentences.push_back("The " + a + " is positioned between the " + b + " and the " + c + ".");
        break;
      default:
        sentences.push_back("In some embodiments, the " + d.subject + " further includes " + with_article(a) + ".");
        break;
    }
  }
  for (std::size_t k = 1; k <= n_figures; ++k) {
    sentences.push_back("FIG. " + std::to_string(k) + " shows a " + kViews[rng.below(kViews.size())] +
                        " view of the " + d.comps[rng.below(d.comps.size())] + ".");
  }
  sentences.push_back("Each " + d.comps[0] + " operates with the " + d.comps[1] + " to provide the described function.");

  CorpusRecord r;
  r.id = id;
  for (std::size_t i = 0; i < sentences.size(); ++i) r.description += (i ? " " : "") + sentences[i];
  r.claims.push_back(capitalize(independent_claim(d)));
  for (std::size_t j = 2; j <= n_claims; ++j) {
    const std::size_t parent = 1 + rng.below(j - 1);
    const auto& x = d.comps[rng.below(3)];
    const auto& y = d.comps[3 + rng.below(4)];
    std::string head = "The " + d.subject + " of claim " + std::to_string(parent);
    if (rng.below(2) == 0) {
      r.claims.push_back(head + ", wherein the " + x + " comprises " + with_article(y) + ".");
    } else {
      r.claims.push_back(head + ", further comprising " + with_article(y) + " connected to the " + x + ".");
    }
  }
  r.domain = chunker::kDomainNames[domain];
  r.jurisdiction = rng.below(2) == 0 ? "US" : "EP";
  r.figure_count = n_figures;
  return r;
}

std::vector<RelationRecord> make_relations(const std::string& id, std::size_t domain, numerics::Rng rng) {
  const auto& pool = domain_pools()[domain];
  Draft d{pick(pool.subjects, rng), pick_distinct(pool.components, 5, rng)};
  const std::string claim = independent_claim(d);
  std::string other = pick(pool.subjects, rng);
  std::vector<RelationRecord> out;
  out.push_back({id + "-equivalence", claim,
                 capitalize(with_article(d.subject)) + " including " + with_article(d.comps[0]) + ", " +
                     with_article(d.comps[1]) + " joined to the " + d.comps[0] + ", and " + with_article(d.comps[2]) +
                     " arranged to hold the " + d.comps[1] + ".",
                 "equivalence"});
  out.push_back({id + "-improvement", claim,
                 claim + " The " + d.comps[1] + " is improved to increase efficiency and reduce wear of the " +
                     d.comps[0] + ".",
                 "improvement"});
  out.push_back({id + "-contradiction", claim,
                 capitalize(with_article(d.subject)) + " that does not include " + with_article(d.comps[0]) +
                     " and operates without any " + d.comps[1] + ".",
                 "contradiction"});
  out.push_back({id + "-technical", claim,
                 capitalize(with_article(other)) + " comprising " + with_article(d.comps[3]) + " and " +
                     with_article(d.comps[4]) + " coupled to the " + d.comps[3] + ".",
                 "technical"});
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) s += (i ? " " : "") + tokens[i];
  return s;
}

// Drops `drop` random tokens, then swaps `swaps` random adjacent pairs.
std::vector<std::string> degrade(std::vector<std::string> tokens, std::size_t drop, std::size_t swaps,
                                 numerics::Rng& rng) {
  for (std::size_t i = 0; i < drop && tokens.size() > 1; ++i) tokens.erase(tokens.begin() + rng.below(tokens.size()));
  for (std::size_t i = 0; i < swaps && tokens.size() > 1; ++i) {
    std::size_t p = rng.below(tokens.size() - 1);
    std::swap(tokens[p], tokens[p + 1]);
  }
  return tokens;
}

std::vector<TupleRecord> make_tuples(const CorpusRecord& r, numerics::Rng rng) {
  std::vector<TupleRecord> out;
  for (std::size_t c = 0; c < std::min<std::size_t>(2, r.claims.size()); ++c) {
    auto ref = textcore::split_tokens(r.claims[c]);
    const std::size_t heavy = std::max<std::size_t>(2, ref.size() / 4);
    auto better = degrade(ref, 1, 0, rng);
    auto worse = degrade(ref, heavy, 2, rng);
    out.push_back({r.id + "-t" + std::to_string(c), join(ref), join(better), join(worse), r.domain.value_or("")});
  }
  return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

std::vector<ordered_json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<ordered_json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ordered_json::parse(line));
    } catch (const std::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string field(const ordered_json& j, const char* key, const std::filesystem::path& path) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw InputError(path.string() + ": missing string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace

std::vector<std::string> DomainPool::words() const {
  std::vector<std::string> w = subjects;
  w.insert(w.end(), components.begin(), components.end());
  return w;
}

const std::array<DomainPool, chunker::kNumDomains>& domain_pools() {
  static const std::array<DomainPool, chunker::kNumDomains> pools = {{
      {{"gearbox", "transmission", "conveyor", "press", "crane", "excavator"},
       {"gear", "shaft", "bearing", "piston", "lever", "spring", "flange", "bracket", "coupling", "crankshaft",
        "valve", "gasket", "hinge", "pulley", "sprocket", "axle", "clutch", "cam", "ratchet", "bolt", "chassis",
        "damper", "linkage", "flywheel", "torsion", "cylinder", "nozzle", "fastener", "spindle", "bushing"}},
      {{"charger", "inverter", "amplifier", "oscillator", "transceiver", "generator"},
       {"capacitor", "resistor", "inductor", "transistor", "diode", "transformer", "electrode", "busbar",
        "rectifier", "relay", "solenoid", "impedance", "antenna", "winding", "insulator", "grounding", "switch",
        "regulator", "filter", "coil", "thyristor", "varistor", "fuse", "terminal", "conductor", "comparator",
        "photodiode", "armature", "commutator", "stator"}},
      {{"server", "compiler", "scheduler", "router", "database", "hypervisor"},
       {"processor", "memory", "cache", "query", "client", "packet", "protocol", "kernel", "buffer", "pointer",
        "register", "instruction", "encryption", "token", "session", "api", "index", "hash", "stack", "queue",
        "thread", "socket", "parser", "interpreter", "bytecode", "allocator", "daemon", "microservice", "payload",
        "checksum"}},
      {{"reactor", "coating", "adhesive", "lubricant", "detergent", "fertilizer"},
       {"catalyst", "polymer", "solvent", "reagent", "monomer", "oxide", "compound", "precipitate", "emulsion",
        "resin", "alloy", "acid", "ester", "ligand", "distillate", "crystal", "additive", "pigment", "surfactant",
        "oligomer", "binder", "slurry", "sulfate", "carbonate", "chloride", "hydroxide", "plasticizer",
        "stabilizer", "initiator", "dispersant"}},
      {{"vaccine", "bioreactor", "biosensor", "therapeutic", "assay", "implant"},
       {"protein", "antibody", "peptide", "enzyme", "plasmid", "vector", "gene", "receptor", "antigen",
        "nucleotide", "culture", "promoter", "ligase", "strain", "genome", "cytokine", "mutation", "hybridoma",
        "lysate", "ribosome", "transcript", "primer", "clone", "tissue", "chromosome", "polymerase", "adjuvant",
        "epitope", "microbe", "biomarker"}},
  }};
  return pools;
}

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t size, std::size_t prior_art) {
  if (size < kMinSynthSize) {
    throw InputError("synthetic corpus size " + std::to_string(size) + " is below the minimum of " +
                     std::to_string(kMinSynthSize));
  }
  numerics::Rng root(seed);
  numerics::Rng records_rng = root.substream("corpus");
  numerics::Rng prior_rng = root.substream("prior_art");
  numerics::Rng relation_rng = root.substream("relations");
  numerics::Rng tuple_rng = root.substream("tuples");
  SynthCorpus out;
  char buf[32];
  for (std::size_t i = 0; i < size; ++i) {
    std::snprintf(buf, sizeof buf, "doc-%03zu", i);
    const std::size_t domain = i % chunker::kNumDomains;
    out.records.push_back(make_record(buf, domain, records_rng.substream(i)));
    auto rel = make_relations(std::string("rel-") + (buf + 4), domain, relation_rng.substream(i));
    out.relations.insert(out.relations.end(), rel.begin(), rel.end());
    auto tuples = make_tuples(out.records.back(), tuple_rng.substream(i));
    out.tuples.insert(out.tuples.end(), tuples.begin(), tuples.end());
  }
  for (std::size_t i = 0; i < prior_art; ++i) {
    std::snprintf(buf, sizeof buf, "prior-%03zu", i);
    out.prior_art.push_back(make_record(buf, i % chunker::kNumDomains, prior_rng.substream(i)));
  }
  return out;
}

std::vector<std::string> corpus_texts(const SynthCorpus& c) {
  std::vector<std::string> texts;
  for (const auto* set : {&c.records, &c.prior_art}) {
    for (const auto& r : *set) {
      texts.push_back(r.description);
      texts.push_back(claims_text(r.claims));
    }
  }
  for (const auto& r : c.relations) {
    texts.push_back(r.claim);
    texts.push_back(r.doc);
  }
  for (const auto& t : c.tuples) texts.push_back(t.reference);
  return texts;
}

void write_synth(const std::filesystem::path& dir, const SynthCorpus& c, std::size_t vocab_cap) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "corpus.jsonl", c.records);
  write_corpus(dir / "prior_art.jsonl", c.prior_art);
  std::vector<std::string> lines;
  for (const auto& r : c.relations) {
    lines.push_back(ordered_json{{"id", r.id}, {"claim", r.claim}, {"doc", r.doc}, {"label", r.label}}.dump());
  }
  write_lines(dir / "relations.jsonl", lines);
  lines.clear();
  for (const auto& t : c.tuples) {
    lines.push_back(ordered_json{{"id", t.id},
                                 {"reference", t.reference},
                                 {"better", t.better},
                                 {"worse", t.worse},
                                 {"domain", t.domain}}
                        .dump());
  }
  write_lines(dir / "tuples.jsonl", lines);
  ordered_json pools;
  for (std::size_t d = 0; d < chunker::kNumDomains; ++d) pools[chunker::kDomainNames[d]] = domain_pools()[d].words();
  write_lines(dir / "domains.json", {pools.dump(2)});
  textcore::Vocabulary::build(corpus_texts(c), vocab_cap).save(dir / "vocab.txt");
}

std::vector<RelationRecord> read_relations(const std::filesystem::path& path) {
  std::vector<RelationRecord> out;
  for (const auto& j : read_json_lines(path)) {
    RelationRecord r{field(j, "id", path), field(j, "claim", path), field(j, "doc", path), field(j, "label", path)};
    try {
      similarity::relationship_index(r.label);
    } catch (const std::exception&) {
      throw InputError(path.string() + ": unknown relationship label '" + r.label + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TupleRecord> read_tuples(const std::filesystem::path& path) {
  std::vector<TupleRecord> out;
  for (const auto& j : read_json_lines(path)) {
    out.push_back({field(j, "id", path), field(j, "reference", path), field(j, "better", path),
                   field(j, "worse", path), j.value("domain", std::string())});
  }
  return out;
}

std::vector<similarity::RelationPair> to_relation_pairs(const std::vector<RelationRecord>& relations,
                                                        const textcore::Vocabulary& vocab) {
  std::vector<similarity::RelationPair> out;
  for (const auto& r : relations) {
    out.push_back({vocab.encode(r.claim), vocab.encode(r.doc), similarity::relationship_index(r.label), true});
  }
  return out;
}

std::vector<evaluator::RankedTuple> to_ranked_tuples(const std::vector<TupleRecord>& tuples,
                                                     const textcore::Vocabulary& vocab) {
  std::vector<evaluator::RankedTuple> out;
  for (const auto& t : tuples) {
    std::optional<std::size_t> domain;
    if (!t.domain.empty()) domain = chunker::domain_index(t.domain);
    out.push_back({t.id, vocab.encode(t.reference), vocab.encode(t.better), vocab.encode(t.worse), domain});
  }
  return out;
}

}  // namespace claimforge::pipeline

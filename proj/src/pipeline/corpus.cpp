#include "claimforge/pipeline/corpus.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "claimforge/textcore/tokenizer.hpp"

namespace claimforge::pipeline {

using nlohmann::ordered_json;

namespace {

std::string required_string(const ordered_json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw InputError(std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

std::optional<std::string> optional_string(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw InputError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

CorpusRecord parse_record(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw InputError("record is not an object");
  CorpusRecord r;
  r.id = required_string(j, "id");
  if (r.id.empty()) throw InputError("empty id");
  r.description = required_string(j, "description");
  if (r.description.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InputError("record " + r.id + ": empty description");
  }
  if (j.contains("claims") && !j["claims"].is_null()) {
    if (!j["claims"].is_array()) throw InputError("record " + r.id + ": claims must be an array");
    for (const auto& c : j["claims"]) {
      if (!c.is_string()) throw InputError("record " + r.id + ": claims must be strings");
      r.claims.push_back(c.get<std::string>());
    }
  }
  r.domain = optional_string(j, "domain");
  if (r.domain) {
    try {
      chunker::domain_index(*r.domain);
    } catch (const std::exception&) {
      throw InputError("record " + r.id + ": unknown domain '" + *r.domain + "'");
    }
  }
  r.jurisdiction = optional_string(j, "jurisdiction");
  if (j.contains("figure_count") && !j["figure_count"].is_null()) {
    if (!j["figure_count"].is_number_unsigned()) {
      throw InputError("record " + r.id + ": figure_count must be a non-negative integer");
    }
    r.figure_count = j["figure_count"].get<std::size_t>();
  }
  return r;
}

std::string to_json_line(const CorpusRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["description"] = r.description;
  j["claims"] = r.claims;
  if (r.domain) j["domain"] = *r.domain;
  if (r.jurisdiction) j["jurisdiction"] = *r.jurisdiction;
  if (r.figure_count) j["figure_count"] = *r.figure_count;
  return j.dump();
}

CorpusFile read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  CorpusFile out;
  std::set<std::string> seen;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = parse_record(line);
      if (!seen.insert(r.id).second) throw InputError("duplicate id " + r.id);
      out.records.push_back(std::move(r));
    } catch (const InputError& e) {
      std::string id;
      try {
        auto j = ordered_json::parse(line);
        if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
      } catch (const std::exception&) {
      }
      out.errors.push_back({n, id, e.what()});
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::string claims_text(const std::vector<std::string>& claims) {
  std::string s;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(i + 1) + ". " + claims[i];
  }
  return s;
}

std::size_t dependent_claim_count(const std::vector<std::string>& claims) {
  std::size_t n = 0;
  for (const auto& c : claims) {
    auto tokens = textcore::split_tokens(c);
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
      if (tokens[i] == "of" && tokens[i + 1] == "claim" && is_number(tokens[i + 2])) {
        ++n;
        break;
      }
    }
  }
  return n;
}

chunker::Document to_document(const CorpusRecord& r, const textcore::Vocabulary& vocab) {
  std::optional<std::size_t> claims;
  if (!r.claims.empty()) claims = r.claims.size();
  auto doc = chunker::make_document(r.id, r.description, vocab, claims, r.figure_count);
  if (r.domain) doc.domain_label = chunker::domain_index(*r.domain);
  doc.jurisdiction = r.jurisdiction;
  return doc;
}

generator::GenerationSample to_generation_sample(const CorpusRecord& r, const textcore::Vocabulary& vocab) {
  generator::GenerationSample s;
  s.id = r.id;
  s.description = vocab.encode(r.description);
  s.claims = vocab.encode(claims_text(r.claims));
  if (r.domain) s.domain = chunker::domain_index(*r.domain);
  s.dependent_claims = dependent_claim_count(r.claims);
  return s;
}

std::vector<textcore::TokenIds> split_claims(const textcore::TokenIds& ids, const textcore::Vocabulary& vocab) {
  std::vector<textcore::TokenIds> claims;
  textcore::TokenIds current;
  auto marker_at = [&](std::size_t i) {
    if (i + 1 >= ids.size() || ids[i + 1] != vocab.id(".")) return false;
    if (ids[i] < textcore::Vocabulary::kReserved || !is_number(vocab.token(ids[i]))) return false;
    return i == 0 || vocab.token(ids[i - 1]) == ".";
  };
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (marker_at(i)) {
      if (!current.empty()) claims.push_back(std::move(current));
      current.clear();
      ++i;
      continue;
    }
    current.push_back(ids[i]);
  }
  if (!current.empty()) claims.push_back(std::move(current));
  return claims;
}

}  // namespace claimforge::pipeline

#include "claimforge/textcore/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "claimforge/textcore/tokenizer.hpp"

namespace claimforge::textcore {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<unk>", "<bos>", "<eos>", "<sep>"}) add(t);
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t cap) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : split_tokens(text)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, _] : ranked) tokens.push_back(tok);
  return from_tokens(tokens, cap);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens, std::size_t cap) {
  if (cap < kReserved) throw TextError("vocabulary cap below reserved size");
  Vocabulary v;
  for (const auto& t : tokens) {
    if (v.size() >= cap) break;
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw TextError("vocabulary token must be non-empty without whitespace: '" + t + "'");
    }
    v.add(t);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TextError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  Vocabulary v = from_tokens(tokens, std::max(kDefaultCap, tokens.size() + kReserved));
  if (v.size() != tokens.size() + kReserved) throw TextError(path.string() + ": duplicate or reserved tokens in vocabulary");
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TextError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw TextError("token id " + std::to_string(id) + " out of vocabulary range");
  return tokens_[id];
}

TokenIds Vocabulary::encode(std::string_view text) const { return encode_tokens(split_tokens(text)); }

TokenIds Vocabulary::encode_tokens(const std::vector<std::string>& tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::tokens(std::span<const std::size_t> ids, bool skip_reserved) const {
  std::vector<std::string> out;
  for (auto id : ids) {
    if (skip_reserved && id < kReserved && id != kUnk) continue;
    out.push_back(token(id));
  }
  return out;
}

std::string Vocabulary::decode(std::span<const std::size_t> ids, bool skip_reserved) const {
  return detokenize(tokens(ids, skip_reserved));
}

}  // namespace claimforge::textcore

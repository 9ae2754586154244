#include "claimforge/chunker/document.hpp"

#include <algorithm>
#include <cctype>

#include "claimforge/textcore/tokenizer.hpp"

namespace claimforge::chunker {

namespace {

std::string trimmed_lower(std::string_view line) {
  std::size_t b = 0, e = line.size();
  while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
  std::string out(line.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_claims_heading(const std::string& line) {
  for (const char* h : {"claims", "claims:", "what is claimed is", "what is claimed is:", "we claim",
                        "we claim:", "i claim", "i claim:"}) {
    if (line == h) return true;
  }
  return false;
}

bool starts_with_number_dot(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  return i > 0 && i < line.size() && line[i] == '.' &&
         (i + 1 == line.size() || !std::isdigit(static_cast<unsigned char>(line[i + 1])));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(trimmed_lower(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::size_t domain_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumDomains; ++i) {
    if (name == kDomainNames[i]) return i;
  }
  throw ChunkError("unknown domain '" + std::string(name) + "'");
}

std::size_t count_claims(std::string_view text) {
  auto lines = lines_of(text);
  auto heading = std::find_if(lines.begin(), lines.end(), is_claims_heading);
  auto from = heading == lines.end() ? lines.begin() : heading + 1;
  return static_cast<std::size_t>(std::count_if(from, lines.end(), starts_with_number_dot));
}

std::size_t count_figures(std::string_view text) {
  std::size_t n = 0;
  for (const auto& tok : textcore::split_tokens(text)) {
    if (tok == "fig" || tok == "figs" || tok == "figure" || tok == "figures") ++n;
  }
  return n;
}

Document make_document(std::string id, std::string text, const textcore::Vocabulary& vocab,
                       std::optional<std::size_t> claim_count, std::optional<std::size_t> figure_count) {
  Document doc;
  doc.id = std::move(id);
  auto spans = textcore::segment(text);
  std::vector<std::string> words;
  words.reserve(spans.size());
  for (auto& s : spans) words.push_back(s.text);
  doc.tokens = vocab.encode_tokens(words);

  // A sentence ends at the first token that begins at or after its byte offset.
  std::size_t t = 0;
  for (std::size_t offset : textcore::sentence_boundaries(text)) {
    while (t < spans.size() && spans[t].begin < offset) ++t;
    if (t > 0 && (doc.sentence_ends.empty() || doc.sentence_ends.back() < t)) doc.sentence_ends.push_back(t);
  }
  doc.claim_count = claim_count ? *claim_count : count_claims(text);
  doc.figure_count = figure_count ? *figure_count : count_figures(text);
  doc.text = std::move(text);
  return doc;
}

}  // namespace claimforge::chunker

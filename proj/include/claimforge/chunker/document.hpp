#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimforge/textcore/vocabulary.hpp"

namespace claimforge::chunker {

using textcore::TokenIds;

class ChunkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumDomains = 5;
inline constexpr const char* kDomainNames[kNumDomains] = {"mechanical", "electrical", "software", "chemical",
                                                           "biotech"};

// Index into kDomainNames; throws ChunkError for unknown names.
std::size_t domain_index(std::string_view name);

struct Document {
  std::string id;
  std::string text;
  TokenIds tokens;
  // Token index where each sentence ends (exclusive), strictly increasing,
  // last entry == tokens.size(). Empty means the text is one sentence.
  std::vector<std::size_t> sentence_ends;
  std::size_t claim_count = 0;
  std::size_t figure_count = 0;
  std::optional<std::size_t> domain_label;
  std::optional<std::string> jurisdiction;
};

// Numbered claims: lines starting with "N." inside the claims section, which
// begins at a heading line ("claims", "what is claimed is", "we claim",
// "i claim"). Without a heading the whole text is scanned.
std::size_t count_claims(std::string_view text);

// Occurrences of the tokens "fig", "figs", "figure" and "figures".
std::size_t count_figures(std::string_view text);

// Tokenizes `text`, maps sentence boundaries to token indices and fills the
// claim and figure counts from the text unless given.
Document make_document(std::string id, std::string text, const textcore::Vocabulary& vocab,
                       std::optional<std::size_t> claim_count = std::nullopt,
                       std::optional<std::size_t> figure_count = std::nullopt);

}  // namespace claimforge::chunker

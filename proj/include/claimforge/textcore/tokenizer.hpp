#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace claimforge::textcore {

struct TokenSpan {
  std::string text;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;  // byte offsets into the source, end exclusive
};

// Whitespace separates tokens; every ASCII punctuation character is a token of
// its own; everything else (letters, digits, non-ASCII bytes) forms words.
std::vector<TokenSpan> segment(std::string_view text);
std::vector<std::string> split_tokens(std::string_view text);
std::string detokenize(const std::vector<std::string>& tokens);

/// Sentence and claim boundaries as end offsets of consecutive segments.
///
/// A segment ends after a terminator (. ; ?), at a blank line, or just before
/// a line that starts with a claim number ("12."). A '.' between two digits
/// and the '.' of a claim number are not terminators. Whitespace-only gaps
/// are folded into the preceding segment. The last offset is always the text
/// length; the result is strictly increasing.
std::vector<std::size_t> sentence_boundaries(std::string_view text);

}  // namespace claimforge::textcore

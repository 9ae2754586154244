#include "claimforge/textcore/tokenizer.hpp"

#include <algorithm>

namespace claimforge::textcore {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_punct(unsigned char c) { return c < 128 && ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126)); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

}  // namespace

std::vector<TokenSpan> segment(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
    } else {
      std::size_t start = i;
      std::string word;
      while (i < text.size()) {
        auto w = static_cast<unsigned char>(text[i]);
        if (is_space(w) || is_punct(w)) break;
        word.push_back(lower(w));
        ++i;
      }
      out.push_back({std::move(word), start, i});
    }
  }
  return out;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& span : segment(text)) out.push_back(std::move(span.text));
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<std::size_t> sentence_boundaries(std::string_view text) {
  std::vector<std::size_t> candidates;
  const std::size_t n = text.size();
  std::size_t line_start = 0;
  std::size_t claim_dot = std::string_view::npos;  // '.' that belongs to a claim number

  auto check_claim_line = [&](std::size_t start) {
    std::size_t j = start;
    while (j < n && (text[j] == ' ' || text[j] == '\t')) ++j;
    std::size_t digits = j;
    while (j < n && is_digit(static_cast<unsigned char>(text[j]))) ++j;
    if (j > digits && j < n && text[j] == '.') {
      claim_dot = j;
      if (start > 0) candidates.push_back(start);
    }
  };
  check_claim_line(0);

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c == '\n') {
      // Blank line: this newline, optional horizontal space, another newline.
      std::size_t j = i + 1;
      while (j < n && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < n && text[j] == '\n') candidates.push_back(j + 1);
      line_start = i + 1;
      check_claim_line(line_start);
      continue;
    }
    if (c == ';' || c == '?') {
      candidates.push_back(i + 1);
    } else if (c == '.') {
      if (i == claim_dot) continue;
      bool decimal = i > 0 && i + 1 < n && is_digit(static_cast<unsigned char>(text[i - 1])) &&
                     is_digit(static_cast<unsigned char>(text[i + 1]));
      if (!decimal) candidates.push_back(i + 1);
    }
  }
  candidates.push_back(n);
  std::sort(candidates.begin(), candidates.end());

  std::vector<std::size_t> out;
  std::size_t last = 0;
  for (std::size_t b : candidates) {
    if (b == 0 || (!out.empty() && b <= out.back())) continue;
    bool blank = std::all_of(text.begin() + static_cast<std::ptrdiff_t>(last), text.begin() + static_cast<std::ptrdiff_t>(b),
                             [](char ch) { return is_space(static_cast<unsigned char>(ch)); });
    if (blank && !out.empty()) {
      out.back() = b;
    } else if (!blank || out.empty()) {
      out.push_back(b);
    }
    last = b;
  }
  if (out.empty()) out.push_back(n);
  return out;
}

}  // namespace claimforge::textcore

#include "claimforge/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace claimforge::pipeline {

std::size_t lcs_length(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::size_t> reference, std::span<const std::size_t> candidate, double beta) {
  RougeScore s;
  if (reference.empty() || candidate.empty()) return s;
  const double lcs = static_cast<double>(lcs_length(reference, candidate));
  if (lcs == 0) return s;
  s.recall = lcs / static_cast<double>(reference.size());
  s.precision = lcs / static_cast<double>(candidate.size());
  const double b2 = beta * beta;
  s.f = (1 + b2) * s.precision * s.recall / (s.recall + b2 * s.precision);
  return s;
}

namespace {

using NGram = std::vector<std::size_t>;

std::map<NGram, std::size_t> ngram_counts(std::span<const std::size_t> seq, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[NGram(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu(std::span<const std::size_t> reference, std::span<const std::size_t> candidate, std::size_t max_n) {
  if (reference.empty() || candidate.empty() || max_n == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto cand = ngram_counts(candidate, n);
    auto ref = ngram_counts(reference, n);
    std::size_t total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
    std::size_t matches = 0;
    for (const auto& [gram, count] : cand) {
      auto it = ref.find(gram);
      if (it != ref.end()) matches += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (matches == 0) return 0.0;
      p = static_cast<double>(matches) / static_cast<double>(total);
    } else if (matches == 0) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      p = static_cast<double>(matches) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

}  // namespace claimforge::pipeline

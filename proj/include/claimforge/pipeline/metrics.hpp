#pragma once

#include <cstddef>
#include <span>

namespace claimforge::pipeline {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

std::size_t lcs_length(std::span<const std::size_t> a, std::span<const std::size_t> b);

// LCS-based ROUGE-L with F = (1+β²)PR / (R + β²P). Zero when either side is empty.
RougeScore rouge_l(std::span<const std::size_t> reference, std::span<const std::size_t> candidate,
                   double beta = 1.2);

// Sentence BLEU: geometric mean of clipped n-gram precisions times the brevity
// penalty. Unigram precision is never smoothed, so no shared unigram gives 0.
// For n ≥ 2 an order with zero matches uses (0 + 1) / (total + 1).
double bleu(std::span<const std::size_t> reference, std::span<const std::size_t> candidate,
            std::size_t max_n = 4);

}  // namespace claimforge::pipeline

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "claimforge/numerics/checkpoint.hpp"
#include "claimforge/numerics/rng.hpp"
#include "claimforge/textcore/encoder.hpp"

namespace claimforge::evaluator {

using numerics::Tensor;
using textcore::TokenIds;

class EvaluatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumAspects = 5;
inline constexpr std::size_t kNumDomains = 5;
inline constexpr std::array<const char*, kNumAspects> kAspectNames = {"completeness", "clarity", "terminology", "logic",
                                                                      "overall"};
inline constexpr double kDefaultBaseMargin = 0.3;
inline constexpr double kDefaultMarginStrength = 0.1;
inline constexpr std::size_t kDefaultDomainEmbedDim = 16;

/// The five aspect heads: query rows e_k, score rows W_k, biases b_k and the
/// aspect-weight logits. Row k of each matrix belongs to aspect k.
struct AspectHeads {
  Tensor queries;         // 5 × model_dim, orthonormal rows at init
  Tensor score_weights;   // 5 × model_dim, zero at init
  Tensor score_bias;      // 1 × 5, zero at init
  Tensor weight_logits;   // 1 × 5, zero at init
  std::array<double, kNumAspects> base_margin{};  // μ_k
  std::array<double, kNumAspects> strength{};     // β_k

  static AspectHeads init(std::size_t model_dim, numerics::Rng& rng, double base_margin = kDefaultBaseMargin,
                          double strength = kDefaultMarginStrength);
  std::vector<Tensor> parameters() const;
};

struct MarginAdapter {
  Tensor domain_embedding;  // E_dom, 5 domains × embed dim
  Tensor projection;        // W_domain, 5 aspects × embed dim (one row per aspect)
  Tensor bias;              // b_domain, 1 × 5

  static MarginAdapter init(numerics::Rng& rng, std::size_t embed_dim = kDefaultDomainEmbedDim);
  std::vector<Tensor> parameters() const;
};

struct EvaluatorModel {
  textcore::EncoderParams encoder;
  AspectHeads heads;
  MarginAdapter margin;

  static EvaluatorModel init(const textcore::EncoderConfig& config, std::size_t vocab_size, numerics::Rng& rng);
  std::vector<Tensor> parameters() const;
  void export_to(numerics::Checkpoint& ck) const;
  static EvaluatorModel import_from(const numerics::Checkpoint& ck, const textcore::EncoderConfig& config);
};

// [BOS] ref [SEP] gen [EOS].
TokenIds pair_sequence(std::span<const std::size_t> ref, std::span<const std::size_t> gen);

// Shortens the longer side first until the pair fits in max_seq_len.
std::pair<TokenIds, TokenIds> fit_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen,
                                       std::size_t max_seq_len);

Tensor encode_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen,
                   const textcore::EncoderParams& encoder);

struct AspectOutput {
  Tensor scores;     // 1 × 5, sigmoid(W_k·h_k + b_k)
  Tensor attention;  // 5 × len, row k = cross-attention weights of aspect k
};

AspectOutput aspect_scores(const Tensor& h_shared, const AspectHeads& heads);

// (overall, w) with w = softmax(logits); both as tensors (1 × 1, 1 × 5).
std::pair<Tensor, Tensor> overall_score(const Tensor& scores, const Tensor& weight_logits);

// μ + β ⊙ tanh(W_domain (E_domᵀ α) + b_domain), 1 × 5; α is 1 × 5.
Tensor adaptive_margins(const Tensor& alpha, const AspectHeads& heads, const MarginAdapter& adapter);
double adaptive_margin(std::size_t aspect, const Tensor& alpha, const AspectHeads& heads, const MarginAdapter& adapter);

struct QualityReport {
  std::array<double, kNumAspects> aspect_scores{};
  std::array<double, kNumAspects> aspect_weights{};
  double overall = 0.0;
  std::array<double, kNumAspects> display_scores{};
  std::array<double, kNumAspects> margins{};
  std::array<double, kNumDomains> domain_mixture{};
};

/// Scores a generated claim against its reference. `alpha` is the domain
/// mixture; an empty span falls back to uniform.
QualityReport evaluate_pair(std::span<const std::size_t> ref, std::span<const std::size_t> gen,
                            const EvaluatorModel& model, std::span<const double> alpha = {});

std::string to_json(const QualityReport& report);

}  // namespace claimforge::evaluator

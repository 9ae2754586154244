#include "claimforge/chunker/chunker.hpp"

#include <algorithm>
#include <cmath>

#include "claimforge/numerics/ops.hpp"

namespace claimforge::chunker {

double complexity(const Document& doc) {
  if (doc.tokens.empty()) throw ChunkError("empty document");
  return static_cast<double>(doc.claim_count + doc.figure_count) / static_cast<double>(doc.tokens.size());
}

std::size_t target_size(double kappa, double centering, double scale) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ChunkError("complexity must be finite and non-negative");
  double z = scale * (kappa - centering);
  double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  auto s = static_cast<std::size_t>(std::floor(256.0 + 768.0 * sig));
  return std::clamp(s, kMinChunkSize, kMaxChunkSize);
}

std::vector<Chunk> chunk(const Document& doc, std::size_t s) {
  const std::size_t n = doc.tokens.size();
  if (n == 0) throw ChunkError("empty document");
  if (s < kMinChunkSize || s > kMaxChunkSize) {
    throw ChunkError("chunk size " + std::to_string(s) + " outside [256, 1024]");
  }
  std::vector<std::size_t> ends = doc.sentence_ends;
  if (ends.empty() || ends.back() != n) ends.push_back(n);

  std::vector<Chunk> out;
  auto emit = [&](std::size_t b, std::size_t e, bool hard) { out.push_back({doc.id, b, e, hard, {}}); };
  std::size_t open = 0;  // start of the open chunk
  std::size_t pos = 0;   // end of the last sentence consumed
  for (std::size_t end : ends) {
    if (end <= pos) continue;
    if (end - open <= s) {
      pos = end;
      continue;
    }
    if (pos > open) {
      emit(open, pos, false);
      open = pos;
    }
    while (end - open > s) {
      emit(open, open + s, true);
      open += s;
    }
    pos = end;
  }
  if (pos > open) emit(open, pos, false);
  return out;
}

std::vector<double> embed_chunk(std::span<const std::size_t> ids, const textcore::EncoderParams& params) {
  if (ids.empty()) throw ChunkError("empty chunk");
  numerics::NoGradGuard no_grad;
  return numerics::mean_rows(textcore::encode_sequence(ids, params)).to_vector();
}

std::vector<Chunk> chunk_and_embed(const Document& doc, const textcore::EncoderParams& params, double centering,
                                   double scale) {
  auto chunks = chunk(doc, target_size(complexity(doc), centering, scale));
  for (auto& c : chunks) {
    std::span<const std::size_t> ids(doc.tokens.data() + c.start_token, c.size());
    c.embedding = embed_chunk(ids, params);
  }
  return chunks;
}

}  // namespace claimforge::chunker

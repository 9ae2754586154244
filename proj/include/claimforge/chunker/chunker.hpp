#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "claimforge/chunker/document.hpp"
#include "claimforge/textcore/encoder.hpp"

namespace claimforge::chunker {

inline constexpr std::size_t kMinChunkSize = 256;
inline constexpr std::size_t kMaxChunkSize = 1024;

struct Chunk {
  std::string doc_id;
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  bool hard_split = false;    // ends inside a sentence
  std::vector<double> embedding;

  std::size_t size() const { return end_token - start_token; }
};

// (claims + figures) / tokens.
double complexity(const Document& doc);

// floor(256 + 768 * sigmoid(scale * (kappa - centering))).
std::size_t target_size(double kappa, double centering = 0.0, double scale = 1.0);

/// Greedy sentence packing.
///
/// Sentences are appended to the open chunk while it stays within `s` tokens.
/// A sentence longer than `s` closes the open chunk and is cut into pieces of
/// `s` tokens; its remainder opens the next chunk.
std::vector<Chunk> chunk(const Document& doc, std::size_t s);

// Mean of the encoder's hidden states over the chunk tokens.
std::vector<double> embed_chunk(std::span<const std::size_t> ids, const textcore::EncoderParams& params);

// chunk() at the document's own target size, then embed every chunk.
std::vector<Chunk> chunk_and_embed(const Document& doc, const textcore::EncoderParams& params,
                                   double centering = 0.0, double scale = 1.0);

}  // namespace claimforge::chunker

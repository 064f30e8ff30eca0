#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/grammar/pattern.hpp"

namespace chunkloc::embed {

struct Block {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t rows = 1;
  std::size_t cols = 1;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row && r < row + rows && c >= col && c < col + cols;
  }
  bool overlaps(const Block& o) const {
    return row < o.row + o.rows && o.row < row + rows && col < o.col + o.cols && o.col < col + cols;
  }
};

// Ground-truth generator for embeddings with known signal placement. Every
// feature (a chunk-number label such as "pp1-pl", or an auxiliary feature)
// owns a block of cells; a sentence gets `amplitude` on the blocks of its
// features plus two noise terms:
//   lexical  N(0, lexical_noise_std^2), keyed by the lexical key only
//   global   N(0, global_noise_std^2),  keyed by (lexical key, features)
struct SyntheticEmbeddingSpec {
  std::map<std::string, Block, std::less<>> blocks;
  double amplitude = 1.0;
  double lexical_noise_std = 0.3;
  double global_noise_std = 0.3;
  std::uint64_t seed = 1;

  // The eight chunk-number blocks (7x3 each) tile rows 25-31. Auxiliary
  // features get 2x4 blocks in rows 15-24 (at most 30 of them).
  static SyntheticEmbeddingSpec default_layout(std::uint64_t seed,
                                               std::span<const std::string> aux_features = {});

  // Throws ConfigError on overlapping or out-of-grid blocks or negative std.
  void validate() const;

  // Rows covered by the chunk-number blocks.
  std::vector<std::size_t> chunk_signal_rows() const;
};

inline constexpr std::string_view kChunkNumberFeatures[] = {
    "np-sg", "np-pl", "pp1-sg", "pp1-pl", "pp2-sg", "pp2-pl", "vp-sg", "vp-pl"};

// Chunk-number labels and "coord" are position free; every other label
// becomes "<position>:<label>".
std::vector<std::string> features_for_labels(std::span<const std::string> labels);

std::uint64_t lexical_key_for_text(std::string_view text);

EmbeddingMatrix synthesize_features(std::span<const std::string> features, std::uint64_t lexical_key,
                                    const SyntheticEmbeddingSpec& spec);
EmbeddingMatrix synthesize_embedding(const grammar::ChunkPattern& pattern, std::uint64_t lexical_key,
                                     const SyntheticEmbeddingSpec& spec);

}  // namespace chunkloc::embed

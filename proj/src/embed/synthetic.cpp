#include "chunkloc/embed/synthetic.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/rng.hpp"

namespace chunkloc::embed {

SyntheticEmbeddingSpec SyntheticEmbeddingSpec::default_layout(std::uint64_t seed,
                                                              std::span<const std::string> aux_features) {
  SyntheticEmbeddingSpec spec;
  spec.seed = seed;
  std::size_t col = 0;
  for (const auto feature : kChunkNumberFeatures) {
    spec.blocks.emplace(std::string(feature), Block{25, col, 7, 3});
    col += 3;
  }
  constexpr std::size_t kAuxRow = 15;
  constexpr std::size_t kAuxRows = 2;
  constexpr std::size_t kAuxCols = 4;
  constexpr std::size_t kPerBand = kCols / kAuxCols;
  constexpr std::size_t kMaxAux = (25 - kAuxRow) / kAuxRows * kPerBand;
  if (aux_features.size() > kMaxAux) {
    throw ConfigError("default layout holds at most " + std::to_string(kMaxAux) +
                      " auxiliary features, got " + std::to_string(aux_features.size()));
  }
  for (std::size_t i = 0; i < aux_features.size(); ++i) {
    const Block b{kAuxRow + (i / kPerBand) * kAuxRows, (i % kPerBand) * kAuxCols, kAuxRows, kAuxCols};
    if (!spec.blocks.emplace(aux_features[i], b).second) {
      throw ConfigError("duplicate synthetic feature '" + aux_features[i] + "'");
    }
  }
  return spec;
}

void SyntheticEmbeddingSpec::validate() const {
  if (lexical_noise_std < 0.0 || global_noise_std < 0.0) {
    throw ConfigError("synthetic noise std must be non-negative");
  }
  for (auto it = blocks.begin(); it != blocks.end(); ++it) {
    const Block& b = it->second;
    if (b.rows == 0 || b.cols == 0 || b.row + b.rows > kRows || b.col + b.cols > kCols) {
      throw ConfigError("synthetic block for '" + it->first + "' is empty or outside the 32x24 grid");
    }
    for (auto jt = std::next(it); jt != blocks.end(); ++jt) {
      if (b.overlaps(jt->second)) {
        throw ConfigError("synthetic blocks '" + it->first + "' and '" + jt->first + "' overlap");
      }
    }
  }
}

std::vector<std::size_t> SyntheticEmbeddingSpec::chunk_signal_rows() const {
  std::set<std::size_t> rows;
  for (const auto feature : kChunkNumberFeatures) {
    if (const auto it = blocks.find(feature); it != blocks.end()) {
      for (std::size_t r = 0; r < it->second.rows; ++r) {
        rows.insert(it->second.row + r);
      }
    }
  }
  return {rows.begin(), rows.end()};
}

std::vector<std::string> features_for_labels(std::span<const std::string> labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool position_free =
        labels[i] == "coord" || std::find(std::begin(kChunkNumberFeatures), std::end(kChunkNumberFeatures),
                                          labels[i]) != std::end(kChunkNumberFeatures);
    out.push_back(position_free ? labels[i] : std::to_string(i) + ":" + labels[i]);
  }
  return out;
}

std::uint64_t lexical_key_for_text(std::string_view text) { return fnv1a64(text); }

EmbeddingMatrix synthesize_features(std::span<const std::string> features, std::uint64_t lexical_key,
                                    const SyntheticEmbeddingSpec& spec) {
  spec.validate();
  std::array<double, kDim> cells{};
  std::uint64_t feature_hash = 0x7e47;
  for (const auto& f : features) {
    const auto it = spec.blocks.find(f);
    if (it == spec.blocks.end()) {
      throw ConfigError("no synthetic block for feature '" + f + "'");
    }
    const Block& b = it->second;
    for (std::size_t r = b.row; r < b.row + b.rows; ++r) {
      for (std::size_t c = b.col; c < b.col + b.cols; ++c) {
        cells[EmbeddingMatrix::flat_index(r, c)] += spec.amplitude;
      }
    }
    feature_hash = combine_seeds(feature_hash, fnv1a64(f));
  }
  if (spec.lexical_noise_std > 0.0) {
    Rng lexical(combine_seeds(spec.seed, combine_seeds(lexical_key, 0x1e71ca1)));
    for (auto& v : cells) {
      v += spec.lexical_noise_std * lexical.normal();
    }
  }
  if (spec.global_noise_std > 0.0) {
    Rng global(combine_seeds(spec.seed, combine_seeds(lexical_key, feature_hash)));
    for (auto& v : cells) {
      v += spec.global_noise_std * global.normal();
    }
  }
  EmbeddingMatrix m;
  for (std::size_t i = 0; i < kDim; ++i) {
    m.flat()[i] = static_cast<float>(cells[i]);
  }
  return m;
}

EmbeddingMatrix synthesize_embedding(const grammar::ChunkPattern& pattern, std::uint64_t lexical_key,
                                     const SyntheticEmbeddingSpec& spec) {
  const auto labels = pattern.labels();
  return synthesize_features(labels, lexical_key, spec);
}

}  // namespace chunkloc::embed

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/encdec/model.hpp"
#include "chunkloc/grammar/dataset.hpp"

namespace chunkloc::encdec {

struct LatentRow {
  std::uint64_t id = 0;
  std::vector<double> mu;
  std::string label;  // canonical pattern string

  friend bool operator==(const LatentRow&, const LatentRow&) = default;
};

// Eval-phase mu of each record.
std::vector<LatentRow> compute_latents(const MaskedEncoderModel& model,
                                       std::span<const grammar::SentenceRecord> records,
                                       const embed::EmbeddingIndex& embeddings);

// id \t mu_0 ... mu_{K-1} \t label, values in shortest round-trip form.
void write_latents(std::ostream& out, std::span<const LatentRow> rows);
std::vector<LatentRow> read_latents(std::istream& in);
void write_latents(const std::filesystem::path& path, std::span<const LatentRow> rows);
std::vector<LatentRow> read_latents(const std::filesystem::path& path);

// Per-class mean vectors; prediction is the centroid with the highest cosine
// (ties to the lowest class index, zero-norm vectors score 0).
class NearestCentroid {
 public:
  // Throws DataError if some class in [0, classes) has no training point.
  NearestCentroid(std::span<const std::vector<double>> points, std::span<const std::size_t> labels,
                  std::size_t classes);

  std::size_t predict(std::span<const double> point) const;
  std::vector<double> scores(std::span<const double> point) const;
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }

 private:
  std::vector<std::vector<double>> centroids_;
};

struct ProbeResult {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::size_t> predicted;
};

// Fits on `train`, scores macro-F1 on `test` over the 14 patterns. Throws
// DataError when a pattern is absent from the training latents.
ProbeResult latent_probe(std::span<const LatentRow> train, std::span<const LatentRow> test);

}  // namespace chunkloc::encdec

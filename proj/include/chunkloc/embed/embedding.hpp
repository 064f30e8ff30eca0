#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

namespace chunkloc::embed {

inline constexpr std::size_t kRows = 32;
inline constexpr std::size_t kCols = 24;
inline constexpr std::size_t kDim = kRows * kCols;
static_assert(kDim == 768);

// A 768-dim sentence vector viewed as a 32x24 grid, row-major:
// cell (r, c) is flat index 24 r + c.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() { values_.fill(0.0f); }

  // Throws ShapeError unless flat.size() == 768 and DataError on non-finite values.
  static EmbeddingMatrix from_flat(std::span<const float> flat, std::uint64_t source_id = 0);

  static constexpr std::size_t flat_index(std::size_t row, std::size_t col) {
    return row * kCols + col;
  }

  float at(std::size_t row, std::size_t col) const { return values_[flat_index(row, col)]; }
  float& at(std::size_t row, std::size_t col) { return values_[flat_index(row, col)]; }

  std::span<const float, kDim> flat() const { return values_; }
  std::span<float, kDim> flat() { return values_; }
  std::vector<double> to_doubles() const { return {values_.begin(), values_.end()}; }

  std::uint64_t source_id = 0;

  // Bitwise equality of the payload (source ids are not compared).
  bool same_bits(const EmbeddingMatrix& other) const;

 private:
  std::array<float, kDim> values_;
};

// EmbeddingFile: "EMB1", u32 count, u32 dim (= 768), count x dim f32, all
// little-endian. Reading assigns source_id = row index.
void write_embeddings(std::ostream& out, std::span<const EmbeddingMatrix> matrices);
std::vector<EmbeddingMatrix> read_embeddings(std::istream& in);
void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingMatrix> matrices);
std::vector<EmbeddingMatrix> read_embeddings(const std::filesystem::path& path);

inline constexpr std::uint64_t payload_bytes(std::uint64_t count) { return count * kDim * 4; }

// Embeddings addressed by sentence id. Row i of an embedding file belongs to
// the i-th record of the paired dataset file.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  // Throws DataError if the counts differ.
  EmbeddingIndex(std::vector<EmbeddingMatrix> rows, std::span<const std::uint64_t> ids);

  bool contains(std::uint64_t id) const { return by_id_.count(id) != 0; }
  // Throws DataError naming the id when it has no embedding.
  const EmbeddingMatrix& at(std::uint64_t id) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<EmbeddingMatrix> rows_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
};

}  // namespace chunkloc::embed

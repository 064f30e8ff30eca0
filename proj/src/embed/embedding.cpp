#include "chunkloc/embed/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "chunkloc/util/byte_io.hpp"
#include "chunkloc/util/error.hpp"

namespace chunkloc::embed {

namespace {
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
}

EmbeddingMatrix EmbeddingMatrix::from_flat(std::span<const float> flat, std::uint64_t source_id) {
  if (flat.size() != kDim) {
    throw ShapeError("embedding must have 768 values, got " + std::to_string(flat.size()));
  }
  EmbeddingMatrix m;
  for (std::size_t i = 0; i < kDim; ++i) {
    if (!std::isfinite(flat[i])) {
      throw DataError("non-finite embedding value at index " + std::to_string(i));
    }
    m.values_[i] = flat[i];
  }
  m.source_id = source_id;
  return m;
}

bool EmbeddingMatrix::same_bits(const EmbeddingMatrix& other) const {
  return std::memcmp(values_.data(), other.values_.data(), sizeof(float) * kDim) == 0;
}

void write_embeddings(std::ostream& out, std::span<const EmbeddingMatrix> matrices) {
  out.write(kMagic, 4);
  byte_io::put_u32(out, static_cast<std::uint32_t>(matrices.size()));
  byte_io::put_u32(out, static_cast<std::uint32_t>(kDim));
  for (const auto& m : matrices) {
    for (const float v : m.flat()) {
      byte_io::put_f32(out, v);
    }
  }
}

std::vector<EmbeddingMatrix> read_embeddings(std::istream& in) {
  byte_io::Reader reader(in);
  char magic[4];
  reader.read_exact(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad embedding file magic '" + std::string(magic, 4) + "'", 0);
  }
  const std::uint32_t count = reader.u32("count");
  const std::uint64_t dim_offset = reader.offset();
  const std::uint32_t dim = reader.u32("dim");
  if (dim != kDim) {
    throw FormatError("embedding dim must be 768, got " + std::to_string(dim), dim_offset);
  }
  std::vector<EmbeddingMatrix> out;
  out.reserve(count);
  std::vector<unsigned char> row(kDim * 4);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t row_start = reader.offset();
    reader.read_exact(row.data(), row.size(), "payload");
    EmbeddingMatrix m;
    for (std::size_t k = 0; k < kDim; ++k) {
      const float v = std::bit_cast<float>(byte_io::decode_u32(row.data() + 4 * k));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite embedding value", row_start + 4 * k);
      }
      m.flat()[k] = v;
    }
    m.source_id = i;
    out.push_back(m);
  }
  if (!reader.at_end()) {
    throw FormatError("trailing bytes after embedding payload", reader.offset());
  }
  return out;
}

void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingMatrix> matrices) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_embeddings(out, matrices);
}

std::vector<EmbeddingMatrix> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return read_embeddings(in);
}

EmbeddingIndex::EmbeddingIndex(std::vector<EmbeddingMatrix> rows, std::span<const std::uint64_t> ids)
    : rows_(std::move(rows)) {
  if (rows_.size() != ids.size()) {
    throw DataError("embedding file has " + std::to_string(rows_.size()) + " rows but dataset has " +
                    std::to_string(ids.size()) + " records");
  }
  by_id_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rows_[i].source_id = ids[i];
    by_id_.emplace(ids[i], i);
  }
}

const EmbeddingMatrix& EmbeddingIndex::at(std::uint64_t id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw DataError("missing embedding for sentence id " + std::to_string(id));
  }
  return rows_[it->second];
}

}  // namespace chunkloc::embed

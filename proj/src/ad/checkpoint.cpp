#include "chunkloc/ad/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "chunkloc/util/byte_io.hpp"
#include "chunkloc/util/error.hpp"

namespace chunkloc::ad {

namespace {
constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;
}  // namespace

void write_checkpoint(std::ostream& out, std::span<const ParameterBlock> blocks) {
  out.write(kMagic, 4);
  byte_io::put_u32(out, kCheckpointVersion);
  byte_io::put_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    if (numel(b.shape) != b.data.size()) {
      throw ShapeError("checkpoint block '" + b.name + "' data does not match its shape");
    }
    byte_io::put_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    byte_io::put_u32(out, static_cast<std::uint32_t>(b.shape.size()));
    for (const auto d : b.shape) {
      byte_io::put_u64(out, d);
    }
    for (const auto v : b.data) {
      byte_io::put_f64(out, v);
    }
  }
}

std::vector<ParameterBlock> read_checkpoint(std::istream& in) {
  byte_io::Reader r(in);
  char magic[4];
  r.read_exact(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw FormatError("bad checkpoint magic", 0);
  }
  const auto version_at = r.offset();
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const auto count = r.u32("block count");
  std::vector<ParameterBlock> blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    ParameterBlock b;
    const auto len_at = r.offset();
    const auto len = r.u32("block name length");
    if (len > kMaxName) {
      throw FormatError("checkpoint block name too long", len_at);
    }
    b.name.resize(len);
    r.read_exact(b.name.data(), len, "block name");
    const auto rank_at = r.offset();
    const auto rank = r.u32("block rank");
    if (rank > kMaxRank) {
      throw FormatError("checkpoint block rank too large", rank_at);
    }
    for (std::uint32_t d = 0; d < rank; ++d) {
      b.shape.push_back(static_cast<std::size_t>(r.u64("block dim")));
    }
    const auto n = numel(b.shape);
    b.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      b.data[k] = r.f64("block data");
    }
    blocks.push_back(std::move(b));
  }
  if (!r.at_end()) {
    throw FormatError("trailing bytes after checkpoint", r.offset());
  }
  return blocks;
}

void write_checkpoint(const std::filesystem::path& path, std::span<const ParameterBlock> blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  write_checkpoint(out, blocks);
  if (!out) {
    throw DataError("failed writing '" + path.string() + "'");
  }
}

std::vector<ParameterBlock> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open checkpoint '" + path.string() + "'");
  }
  return read_checkpoint(in);
}

const ParameterBlock& find_block(std::span<const ParameterBlock> blocks, std::string_view name) {
  const auto it = std::find_if(blocks.begin(), blocks.end(),
                               [&](const ParameterBlock& b) { return b.name == name; });
  if (it == blocks.end()) {
    throw DataError("checkpoint has no block '" + std::string(name) + "'");
  }
  return *it;
}

}  // namespace chunkloc::ad

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chunkloc/ad/tensor.hpp"

namespace chunkloc::ad {

struct ParameterBlock {
  std::string name;
  Shape shape;
  std::vector<double> data;

  friend bool operator==(const ParameterBlock&, const ParameterBlock&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "CKPT", u32 version, u32 block count, then per block: u32 name length,
// name bytes, u32 rank, rank x u64 dims, f64 data. Little-endian.
void write_checkpoint(std::ostream& out, std::span<const ParameterBlock> blocks);
std::vector<ParameterBlock> read_checkpoint(std::istream& in);
void write_checkpoint(const std::filesystem::path& path, std::span<const ParameterBlock> blocks);
std::vector<ParameterBlock> read_checkpoint(const std::filesystem::path& path);

// Throws DataError if the name is absent.
const ParameterBlock& find_block(std::span<const ParameterBlock> blocks, std::string_view name);

}  // namespace chunkloc::ad

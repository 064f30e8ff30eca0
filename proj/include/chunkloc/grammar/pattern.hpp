#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chunkloc::grammar {

enum class ChunkKind : std::uint8_t { np, pp1, pp2, vp };
enum class GramNumber : std::uint8_t { sg, pl };

std::string_view to_string(ChunkKind kind);
std::string_view to_string(GramNumber number);
GramNumber flip(GramNumber number);

struct Chunk {
  ChunkKind kind;
  GramNumber number;

  std::string label() const;  // e.g. "pp1-pl"
  friend auto operator<=>(const Chunk&, const Chunk&) = default;
};

// Chunk configuration NP [PP1 [PP2]] VP with subject-verb agreement.
// Instances are always valid; construction validates.
class ChunkPattern {
 public:
  static bool is_valid(std::span<const Chunk> chunks);
  // Throws ConfigError if the chunks do not form a valid pattern.
  static ChunkPattern from_chunks(std::vector<Chunk> chunks);
  // Parses the canonical form "np-sg pp1-pl vp-sg".
  static ChunkPattern parse(std::string_view text);

  std::span<const Chunk> chunks() const { return chunks_; }
  std::size_t length() const { return chunks_.size(); }
  GramNumber subject_number() const { return chunks_.front().number; }
  std::string str() const;
  std::vector<std::string> labels() const;

  // Canonical order: by length, then lexicographic on the number sequence.
  friend std::strong_ordering operator<=>(const ChunkPattern& a, const ChunkPattern& b);
  friend bool operator==(const ChunkPattern& a, const ChunkPattern& b) = default;

 private:
  explicit ChunkPattern(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {}
  std::vector<Chunk> chunks_;
};

// The 14 valid patterns in canonical order.
const std::vector<ChunkPattern>& enumerate_patterns();
// Position of a pattern in enumerate_patterns().
std::size_t pattern_index(const ChunkPattern& pattern);

enum class PairKind : std::uint8_t { length, gram_number, subj_verb };
std::string_view to_string(PairKind kind);
PairKind parse_pair_kind(std::string_view text);
inline constexpr PairKind kAllPairKinds[] = {PairKind::gram_number, PairKind::length,
                                             PairKind::subj_verb};

struct MinimalPair {
  PairKind kind;
  ChunkPattern p1;
  ChunkPattern p2;
};

// length:      p1 is p2 with one PP deleted (order kept, PPs renumbered).
// gram_number: same length, exactly one PP differs in number.
// subj_verb:   identical PPs, NP and VP numbers both flipped.
std::vector<MinimalPair> minimal_pairs(PairKind kind);

}  // namespace chunkloc::grammar

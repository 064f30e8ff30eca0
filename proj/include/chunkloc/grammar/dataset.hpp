#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chunkloc/grammar/lexicon.hpp"
#include "chunkloc/grammar/pattern.hpp"

namespace chunkloc::grammar {

enum class Split : std::uint8_t { train, dev, test };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SentenceRecord {
  std::uint64_t id = 0;
  std::string text;
  ChunkPattern pattern = enumerate_patterns().front();
  Split split = Split::train;
};

// Number of sentences generate_sentences() will produce: for every pattern the
// product of its slot sizes (a PP slot contributes |prep| x |pp-number|).
std::size_t expected_sentence_count(const Lexicon& lexicon);

// Every (pattern x lexical choice) combination exactly once, in a seeded
// order; ids are 0..N-1 in that order. Splits are all train until
// build_instances() assigns them.
std::vector<SentenceRecord> generate_sentences(const Lexicon& lexicon, std::uint64_t seed);

inline constexpr std::size_t kCandidates = 7;

struct SentenceInstance {
  std::uint64_t input_id = 0;
  std::array<std::uint64_t, kCandidates> candidate_ids{};
  std::size_t correct_index = 0;
};

struct SplitRatio {
  std::size_t train = 2576;
  std::size_t dev = 630;
  std::size_t test = 798;
};

// Largest-remainder apportionment of `total` over the ratio.
std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatio& ratio);

struct InstanceSet {
  std::vector<SentenceRecord> records;  // input records with split assigned
  std::array<std::vector<SentenceInstance>, 3> splits;  // indexed by Split

  const std::vector<SentenceInstance>& of(Split s) const {
    return splits[static_cast<std::size_t>(s)];
  }
};

// Builds n instances (n/14 per input pattern, stratified over the splits).
// The records of each pattern are partitioned into split pools by the same
// ratio and an instance only draws sentences from its own split's pools.
InstanceSet build_instances(std::vector<SentenceRecord> records, std::size_t n, std::uint64_t seed,
                            const SplitRatio& ratio = {});

// Sentence dataset file: id \t text \t pattern \t split, LF terminated.
void write_sentences(std::ostream& out, std::span<const SentenceRecord> records);
std::vector<SentenceRecord> read_sentences(std::istream& in);
void write_sentences(const std::filesystem::path& path, std::span<const SentenceRecord> records);
std::vector<SentenceRecord> read_sentences(const std::filesystem::path& path);

// Instance file: input id \t 7 candidate ids \t correct index.
void write_instances(std::ostream& out, std::span<const SentenceInstance> instances);
std::vector<SentenceInstance> read_instances(std::istream& in);
void write_instances(const std::filesystem::path& path, std::span<const SentenceInstance> instances);
std::vector<SentenceInstance> read_instances(const std::filesystem::path& path);

}  // namespace chunkloc::grammar

#include "chunkloc/grammar/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/rng.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::grammar {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") {
    return Split::train;
  }
  if (text == "dev") {
    return Split::dev;
  }
  if (text == "test") {
    return Split::test;
  }
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

namespace {

// One surface alternative per lexical choice of a chunk.
std::vector<std::string> chunk_alternatives(const Lexicon& lex, const Chunk& chunk) {
  const std::string slot = chunk.label();
  switch (chunk.kind) {
    case ChunkKind::np:
    case ChunkKind::vp:
      return lex.entries(slot);
    case ChunkKind::pp1:
    case ChunkKind::pp2: {
      const auto& preps = lex.entries(chunk.kind == ChunkKind::pp1 ? "prep1" : "prep2");
      const auto& nouns = lex.entries(slot);
      std::vector<std::string> out;
      out.reserve(preps.size() * nouns.size());
      for (const auto& prep : preps) {
        for (const auto& noun : nouns) {
          out.push_back(prep + " " + noun);
        }
      }
      return out;
    }
  }
  return {};
}

}  // namespace

std::size_t expected_sentence_count(const Lexicon& lexicon) {
  lexicon.require_sentence_slots();
  std::size_t total = 0;
  for (const auto& pattern : enumerate_patterns()) {
    std::size_t product = 1;
    for (const auto& chunk : pattern.chunks()) {
      const std::string slot = chunk.label();
      std::size_t slot_size = lexicon.size(slot);
      if (chunk.kind == ChunkKind::pp1) {
        slot_size *= lexicon.size("prep1");
      } else if (chunk.kind == ChunkKind::pp2) {
        slot_size *= lexicon.size("prep2");
      }
      product *= slot_size;
    }
    total += product;
  }
  return total;
}

std::vector<SentenceRecord> generate_sentences(const Lexicon& lexicon, std::uint64_t seed) {
  lexicon.require_sentence_slots();
  std::vector<SentenceRecord> records;
  for (const auto& pattern : enumerate_patterns()) {
    std::vector<std::vector<std::string>> alternatives;
    for (const auto& chunk : pattern.chunks()) {
      alternatives.push_back(chunk_alternatives(lexicon, chunk));
    }
    // Mixed-radix counter over the per-chunk alternatives.
    std::vector<std::size_t> digits(alternatives.size(), 0);
    bool done = false;
    while (!done) {
      SentenceRecord rec;
      rec.pattern = pattern;
      for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0) {
          rec.text += ' ';
        }
        rec.text += alternatives[i][digits[i]];
      }
      records.push_back(std::move(rec));
      std::size_t pos = digits.size();
      for (;;) {
        if (pos == 0) {
          done = true;
          break;
        }
        --pos;
        if (++digits[pos] < alternatives[pos].size()) {
          break;
        }
        digits[pos] = 0;
      }
    }
  }
  Rng rng(combine_seeds(seed, 0x5e57e9ce));
  rng.shuffle(std::span(records));
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].id = i;
  }
  return records;
}

std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatio& ratio) {
  const std::array<std::size_t, 3> weights = {ratio.train, ratio.dev, ratio.test};
  const std::size_t sum = weights[0] + weights[1] + weights[2];
  if (sum == 0) {
    throw ConfigError("split ratio must have a positive part");
  }
  std::array<std::size_t, 3> out{};
  std::array<std::size_t, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = total * weights[i] / sum;
    remainder[i] = total * weights[i] % sum;
    assigned += out[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (remainder[i] > remainder[best]) {
        best = i;
      }
    }
    ++out[best];
    remainder[best] = 0;
    ++assigned;
  }
  return out;
}

InstanceSet build_instances(std::vector<SentenceRecord> records, std::size_t n, std::uint64_t seed,
                            const SplitRatio& ratio) {
  const auto& patterns = enumerate_patterns();
  const std::size_t num_patterns = patterns.size();
  if (n == 0 || n % num_patterns != 0) {
    throw ConfigError("instance count " + std::to_string(n) + " is not a positive multiple of " +
                      std::to_string(num_patterns));
  }
  Rng rng(combine_seeds(seed, 0x1257a9ce));

  // pools[pattern][split] -> indices into records
  std::vector<std::array<std::vector<std::size_t>, 3>> pools(num_patterns);
  {
    std::vector<std::vector<std::size_t>> by_pattern(num_patterns);
    for (std::size_t i = 0; i < records.size(); ++i) {
      by_pattern[pattern_index(records[i].pattern)].push_back(i);
    }
    for (std::size_t p = 0; p < num_patterns; ++p) {
      auto& members = by_pattern[p];
      rng.shuffle(std::span(members));
      const auto sizes = apportion(members.size(), ratio);
      std::size_t offset = 0;
      for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < sizes[s]; ++k) {
          const std::size_t idx = members[offset + k];
          records[idx].split = static_cast<Split>(s);
          pools[p][s].push_back(idx);
        }
        offset += sizes[s];
      }
    }
  }

  InstanceSet result;
  const auto per_split = apportion(n / num_patterns, ratio);
  for (std::size_t s = 0; s < 3; ++s) {
    auto& out = result.splits[s];
    for (std::size_t p = 0; p < num_patterns; ++p) {
      const auto& pool = pools[p][s];
      const std::size_t count = per_split[s];
      if (count == 0) {
        continue;
      }
      if (pool.size() < std::max<std::size_t>(count, 2)) {
        throw DataError("insufficient records for pattern '" + patterns[p].str() + "' in split " +
                        std::string(to_string(static_cast<Split>(s))) + ": need " +
                        std::to_string(std::max<std::size_t>(count, 2)) + ", have " +
                        std::to_string(pool.size()));
      }
      std::vector<std::size_t> inputs = pool;
      rng.shuffle(std::span(inputs));
      inputs.resize(count);
      for (const std::size_t input : inputs) {
        SentenceInstance inst;
        inst.input_id = records[input].id;
        // Correct candidate: another sentence with the same pattern.
        std::size_t correct = pool[rng.below(pool.size())];
        while (correct == input) {
          correct = pool[rng.below(pool.size())];
        }
        std::vector<std::size_t> others;
        for (std::size_t q = 0; q < num_patterns; ++q) {
          if (q != p) {
            if (pools[q][s].empty()) {
              throw DataError("insufficient records for pattern '" + patterns[q].str() +
                              "' in split " + std::string(to_string(static_cast<Split>(s))));
            }
            others.push_back(q);
          }
        }
        rng.shuffle(std::span(others));
        inst.correct_index = rng.below(kCandidates);
        std::size_t next_other = 0;
        for (std::size_t c = 0; c < kCandidates; ++c) {
          if (c == inst.correct_index) {
            inst.candidate_ids[c] = records[correct].id;
          } else {
            const auto& other_pool = pools[others[next_other++]][s];
            inst.candidate_ids[c] = records[other_pool[rng.below(other_pool.size())]].id;
          }
        }
        out.push_back(inst);
      }
    }
    rng.shuffle(std::span(out));
  }
  result.records = std::move(records);
  return result;
}

void write_sentences(std::ostream& out, std::span<const SentenceRecord> records) {
  for (const auto& r : records) {
    out << r.id << '\t' << r.text << '\t' << r.pattern.str() << '\t' << to_string(r.split) << '\n';
  }
}

std::vector<SentenceRecord> read_sentences(std::istream& in) {
  std::vector<SentenceRecord> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 4) {
      throw FormatError("sentence line needs 4 tab-separated fields, got " +
                        std::to_string(fields.size()), lineno);
    }
    SentenceRecord rec;
    rec.id = text::parse_u64(fields[0], lineno);
    rec.text = std::string(fields[1]);
    try {
      rec.pattern = ChunkPattern::parse(fields[2]);
      rec.split = parse_split(fields[3]);
    } catch (const ConfigError& e) {
      throw FormatError(e.what(), lineno);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_sentences(const std::filesystem::path& path, std::span<const SentenceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_sentences(out, records);
}

std::vector<SentenceRecord> read_sentences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return read_sentences(in);
}

void write_instances(std::ostream& out, std::span<const SentenceInstance> instances) {
  for (const auto& inst : instances) {
    out << inst.input_id;
    for (const auto id : inst.candidate_ids) {
      out << '\t' << id;
    }
    out << '\t' << inst.correct_index << '\n';
  }
}

std::vector<SentenceInstance> read_instances(std::istream& in) {
  std::vector<SentenceInstance> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != kCandidates + 2) {
      throw FormatError("instance line needs 9 tab-separated fields, got " +
                        std::to_string(fields.size()), lineno);
    }
    SentenceInstance inst;
    inst.input_id = text::parse_u64(fields[0], lineno);
    for (std::size_t c = 0; c < kCandidates; ++c) {
      inst.candidate_ids[c] = text::parse_u64(fields[c + 1], lineno);
    }
    inst.correct_index = static_cast<std::size_t>(text::parse_u64(fields[kCandidates + 1], lineno));
    if (inst.correct_index >= kCandidates) {
      throw FormatError("correct index out of range", lineno);
    }
    out.push_back(inst);
  }
  return out;
}

void write_instances(const std::filesystem::path& path, std::span<const SentenceInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  write_instances(out, instances);
}

std::vector<SentenceInstance> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return read_instances(in);
}

}  // namespace chunkloc::grammar

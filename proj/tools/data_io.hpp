#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <vector>

#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/encdec/training.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "common.hpp"

namespace chunkloc::cli {

// Files written by `generate --kind sentence`.
struct SentenceFiles {
  fs::path sentences;
  std::array<fs::path, 3> instances;  // by grammar::Split

  // Throws DataError naming the first missing file.
  static SentenceFiles in(const fs::path& dir);
  std::vector<fs::path> all() const;
};

struct SentenceData {
  std::vector<grammar::SentenceRecord> records;
  embed::EmbeddingIndex index;
  std::array<std::vector<grammar::SentenceInstance>, 3> instances;

  const std::vector<grammar::SentenceInstance>& of(grammar::Split s) const {
    return instances[static_cast<std::size_t>(s)];
  }
  std::vector<grammar::SentenceRecord> records_of(grammar::Split s) const;
};

SentenceData load_sentence_data(const SentenceFiles& files, const fs::path& embeddings);

// Files written by `generate --kind blm`.
struct BlmFiles {
  fs::path sentences;
  std::array<fs::path, 3> instances;

  static BlmFiles in(const fs::path& dir);
  std::vector<fs::path> all() const;
};

struct BlmData {
  blm::BlmTask task = blm::BlmTask::agreement;
  std::vector<blm::BlmSentence> sentences;
  embed::EmbeddingIndex index;
  std::array<std::vector<blm::BlmInstance>, 3> instances;

  const std::vector<blm::BlmInstance>& of(grammar::Split s) const {
    return instances[static_cast<std::size_t>(s)];
  }
};

// The files must agree on the task; `expected` overrides a missing header.
BlmData load_blm_data(const BlmFiles& files, const fs::path& embeddings, std::optional<blm::BlmTask> expected);

embed::EmbeddingIndex pair_embeddings(const fs::path& embeddings, const std::vector<std::uint64_t>& ids);

Json epoch_record(const encdec::EpochStats& e);
double seconds_since(std::chrono::steady_clock::time_point t0);
void truncate_file(const fs::path& path);

}  // namespace chunkloc::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/embed/synthetic.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "chunkloc/grammar/lexicon.hpp"

namespace chunkloc::testing {

std::filesystem::path data_dir();
const grammar::Lexicon& default_lexicon();

// Fresh empty directory under the system temp path.
std::filesystem::path scratch_dir(const std::string& name);

std::vector<grammar::SentenceRecord> records_in(std::span<const grammar::SentenceRecord> records,
                                                grammar::Split split);

// Synthetic embedding of every record, keyed by record id.
embed::EmbeddingIndex synthetic_index(std::span<const grammar::SentenceRecord> records,
                                      const embed::SyntheticEmbeddingSpec& spec);

// Default-scale sentence task: 14 patterns, 4004 instances, default layout.
struct SentenceFixture {
  grammar::InstanceSet set;
  embed::EmbeddingIndex index;
};
SentenceFixture make_sentence_fixture(std::uint64_t data_seed = 1, std::uint64_t embed_seed = 1,
                                      std::size_t instances = 4004);

struct BlmFixture {
  blm::BlmDataset data;
  embed::EmbeddingIndex index;
};
BlmFixture make_blm_fixture(blm::BlmTask task, blm::Variation variation, const blm::BlmCounts& counts,
                            std::uint64_t data_seed = 1, std::uint64_t embed_seed = 1);

}  // namespace chunkloc::testing

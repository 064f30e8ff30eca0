#include "fixtures.hpp"

#include <atomic>
#include <string>

#include <unistd.h>

namespace chunkloc::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(CHUNKLOC_DATA_DIR); }

const grammar::Lexicon& default_lexicon() {
  static const grammar::Lexicon lexicon = grammar::Lexicon::load(data_dir() / "lexicon.txt");
  return lexicon;
}

fs::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const auto dir = fs::temp_directory_path() /
                   ("chunkloc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<grammar::SentenceRecord> records_in(std::span<const grammar::SentenceRecord> records,
                                                grammar::Split split) {
  std::vector<grammar::SentenceRecord> out;
  for (const auto& r : records) {
    if (r.split == split) {
      out.push_back(r);
    }
  }
  return out;
}

embed::EmbeddingIndex synthetic_index(std::span<const grammar::SentenceRecord> records,
                                      const embed::SyntheticEmbeddingSpec& spec) {
  std::vector<embed::EmbeddingMatrix> rows;
  std::vector<std::uint64_t> ids;
  rows.reserve(records.size());
  ids.reserve(records.size());
  for (const auto& r : records) {
    rows.push_back(embed::synthesize_embedding(r.pattern, embed::lexical_key_for_text(r.text), spec));
    ids.push_back(r.id);
  }
  return embed::EmbeddingIndex(std::move(rows), ids);
}

SentenceFixture make_sentence_fixture(std::uint64_t data_seed, std::uint64_t embed_seed, std::size_t instances) {
  auto records = grammar::generate_sentences(default_lexicon(), data_seed);
  SentenceFixture f{grammar::build_instances(std::move(records), instances, data_seed), {}};
  f.index = synthetic_index(f.set.records, embed::SyntheticEmbeddingSpec::default_layout(embed_seed));
  return f;
}

BlmFixture make_blm_fixture(blm::BlmTask task, blm::Variation variation, const blm::BlmCounts& counts,
                            std::uint64_t data_seed, std::uint64_t embed_seed) {
  BlmFixture f{blm::generate_dataset(task, default_lexicon(), counts, variation, data_seed), {}};
  const auto spec = blm::blm_layout(task, embed_seed);
  std::vector<embed::EmbeddingMatrix> rows;
  std::vector<std::uint64_t> ids;
  for (const auto& s : f.data.sentences) {
    rows.push_back(blm::synthesize_sentence(s, spec));
    ids.push_back(s.id);
  }
  f.index = embed::EmbeddingIndex(std::move(rows), ids);
  return f;
}

}  // namespace chunkloc::testing

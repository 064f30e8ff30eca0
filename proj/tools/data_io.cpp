#include "data_io.hpp"

#include <fstream>

namespace chunkloc::cli {

namespace {

constexpr grammar::Split kSplits[] = {grammar::Split::train, grammar::Split::dev, grammar::Split::test};

}  // namespace

SentenceFiles SentenceFiles::in(const fs::path& dir) {
  SentenceFiles f;
  f.sentences = dir / "sentences.tsv";
  require_file(f.sentences, "sentence file");
  for (const auto s : kSplits) {
    auto& p = f.instances[static_cast<std::size_t>(s)];
    p = dir / ("instances_" + std::string(grammar::to_string(s)) + ".tsv");
    require_file(p, "instance file");
  }
  return f;
}

std::vector<fs::path> SentenceFiles::all() const {
  return {sentences, instances[0], instances[1], instances[2]};
}

std::vector<grammar::SentenceRecord> SentenceData::records_of(grammar::Split s) const {
  std::vector<grammar::SentenceRecord> out;
  for (const auto& r : records) {
    if (r.split == s) {
      out.push_back(r);
    }
  }
  return out;
}

embed::EmbeddingIndex pair_embeddings(const fs::path& embeddings, const std::vector<std::uint64_t>& ids) {
  require_file(embeddings, "embedding file");
  auto rows = embed::read_embeddings(embeddings);
  return embed::EmbeddingIndex(std::move(rows), ids);
}

SentenceData load_sentence_data(const SentenceFiles& files, const fs::path& embeddings) {
  SentenceData d;
  d.records = grammar::read_sentences(files.sentences);
  std::vector<std::uint64_t> ids;
  ids.reserve(d.records.size());
  for (const auto& r : d.records) {
    ids.push_back(r.id);
  }
  d.index = pair_embeddings(embeddings, ids);
  for (std::size_t s = 0; s < 3; ++s) {
    d.instances[s] = grammar::read_instances(files.instances[s]);
  }
  return d;
}

BlmFiles BlmFiles::in(const fs::path& dir) {
  BlmFiles f;
  f.sentences = dir / "blm_sentences.tsv";
  require_file(f.sentences, "BLM sentence file");
  for (const auto s : kSplits) {
    auto& p = f.instances[static_cast<std::size_t>(s)];
    p = dir / ("blm_" + std::string(grammar::to_string(s)) + ".tsv");
    require_file(p, "BLM instance file");
  }
  return f;
}

std::vector<fs::path> BlmFiles::all() const { return {sentences, instances[0], instances[1], instances[2]}; }

BlmData load_blm_data(const BlmFiles& files, const fs::path& embeddings, std::optional<blm::BlmTask> expected) {
  BlmData d;
  d.sentences = blm::read_blm_sentences(files.sentences);
  std::vector<std::uint64_t> ids;
  ids.reserve(d.sentences.size());
  for (const auto& s : d.sentences) {
    ids.push_back(s.id);
  }
  d.index = pair_embeddings(embeddings, ids);
  std::optional<blm::BlmTask> task = expected;
  for (std::size_t s = 0; s < 3; ++s) {
    auto file = blm::load_blm(files.instances[s], task);
    task = file.task;
    d.instances[s] = std::move(file.instances);
  }
  if (!task) {
    throw DataError("BLM instance files declare no task; pass --task");
  }
  d.task = *task;
  return d;
}

Json epoch_record(const encdec::EpochStats& e) {
  return {{"epoch", e.epoch},           {"tau", e.tau},           {"train_loss", e.train_loss},
          {"train_margin", e.train_margin}, {"train_kl", e.train_kl}, {"dev_loss", e.dev_loss}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void truncate_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
}

}  // namespace chunkloc::cli

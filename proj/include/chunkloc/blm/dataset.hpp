#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chunkloc/blm/template.hpp"
#include "chunkloc/embed/synthetic.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "chunkloc/grammar/lexicon.hpp"

namespace chunkloc::blm {

// Lexical slots of a task in a fixed order. Agreement: noun, verb,
// coord-noun, coord, prep1, pp1, prep2, pp2. Alternation: agent, theme,
// location, verb, prep-agent, prep-theme, prep-loc, prep-wrong, prep-emb.
struct LexicalSlot {
  std::string name;
  std::size_t size;
};
// Throws ConfigError naming the first missing or misaligned lexicon slot.
std::vector<LexicalSlot> lexical_slots(BlmTask task, const grammar::Lexicon& lexicon);

// One entry index per lexical slot.
using LexicalChoice = std::vector<std::size_t>;

// Surface text of a label sequence. Throws ConfigError on a label outside the task.
std::string realize(BlmTask task, const LabelSequence& labels, const LexicalChoice& choice,
                    const grammar::Lexicon& lexicon);

struct LexicalItem {
  std::string slot;
  std::size_t index;
  friend auto operator<=>(const LexicalItem&, const LexicalItem&) = default;
};

struct Recognition {
  LabelSequence labels;
  std::vector<LexicalItem> items;  // content slots only (nouns and verbs)
};

// Parses realized sentences back into labels by longest match over every
// realization of every task label.
class Recognizer {
 public:
  Recognizer(BlmTask task, const grammar::Lexicon& lexicon);
  std::optional<Recognition> parse(std::string_view text) const;

 private:
  struct Form {
    std::vector<std::string> words;
    std::string label;
    std::vector<LexicalItem> items;
  };
  std::vector<Form> forms_;
};

struct BlmSentence {
  std::uint64_t id = 0;
  std::string text;
  LabelSequence labels;
  grammar::Split split = grammar::Split::train;
};

struct BlmInstance {
  std::array<std::uint64_t, kContextRows> context{};
  std::vector<std::uint64_t> candidates;
  std::vector<std::string> tags;  // parallel to candidates
  std::size_t correct_index = 0;
  Variation variation = Variation::I;

  friend bool operator==(const BlmInstance&, const BlmInstance&) = default;
};

// Sentences deduplicated by text; ids are assigned in first-use order.
class SentencePool {
 public:
  std::uint64_t intern(const std::string& text, const LabelSequence& labels);
  const std::vector<BlmSentence>& sentences() const { return sentences_; }
  std::vector<BlmSentence>& sentences() { return sentences_; }

 private:
  std::vector<BlmSentence> sentences_;
  std::unordered_map<std::string, std::uint64_t> by_text_;
};

// n distinct instances (no two share the same context and candidate set).
// Candidate order is shuffled per instance. Throws DataError if the lexicon
// cannot supply n distinct instances and ConfigError on lexicon gaps.
std::vector<BlmInstance> generate_blm(const BlmTemplate& tmpl, const grammar::Lexicon& lexicon, std::size_t n,
                                      Variation variation, std::uint64_t seed, SentencePool& pool);

// 2000 training instances of which dev_fraction serve as dev; test counts per
// task and variation: agreement 252 / 4866 / 4869, alternations 375 / 1500 / 1500.
struct BlmCounts {
  std::size_t train = 2000;
  std::size_t test = 0;
  double dev_fraction = 0.2;

  static BlmCounts table_defaults(BlmTask task, Variation variation);
};

struct BlmDataset {
  BlmTask task = BlmTask::agreement;
  std::vector<BlmSentence> sentences;
  std::array<std::vector<BlmInstance>, 3> splits;  // indexed by grammar::Split

  const std::vector<BlmInstance>& of(grammar::Split s) const {
    return splits[static_cast<std::size_t>(s)];
  }
};

// Sentence splits follow the first split (train, dev, test) that uses them.
BlmDataset generate_dataset(BlmTask task, const grammar::Lexicon& lexicon, const BlmCounts& counts,
                            Variation variation, std::uint64_t seed);

// Checks tags against the task's answer set, the correct tag position and,
// through the recognizer, that every context row and candidate realizes its
// template labels. Throws DataError describing the first mismatch.
void validate_instance(const BlmInstance& inst, BlmTask task,
                       const std::unordered_map<std::uint64_t, const BlmSentence*>& sentences,
                       const Recognizer& recognizer);
std::unordered_map<std::uint64_t, const BlmSentence*> index_sentences(std::span<const BlmSentence> sentences);

// BLM sentence file: id \t text \t labels (space separated) \t split.
void write_blm_sentences(std::ostream& out, std::span<const BlmSentence> sentences);
std::vector<BlmSentence> read_blm_sentences(std::istream& in);
void write_blm_sentences(const std::filesystem::path& path, std::span<const BlmSentence> sentences);
std::vector<BlmSentence> read_blm_sentences(const std::filesystem::path& path);

// BLM instance file, optional first line "#task=<task>", then one instance
// per line, tab separated: 7 context ids, candidate count k, k candidate ids,
// k error tags, correct index, variation (I, II or III).
struct BlmFile {
  std::optional<BlmTask> task;
  std::vector<BlmInstance> instances;
};
void write_blm(std::ostream& out, std::optional<BlmTask> task, std::span<const BlmInstance> instances);
void write_blm(const std::filesystem::path& path, std::optional<BlmTask> task,
               std::span<const BlmInstance> instances);
// The expected task (argument, else header) fixes the candidate count and
// tag set; without either every row must match one task's answer set.
// Throws FormatError with the 1-based line number.
BlmFile load_blm(std::istream& in, std::optional<BlmTask> expected = std::nullopt);
BlmFile load_blm(const std::filesystem::path& path, std::optional<BlmTask> expected = std::nullopt);

// Synthetic layout with the task's auxiliary features.
embed::SyntheticEmbeddingSpec blm_layout(BlmTask task, std::uint64_t seed);
embed::EmbeddingMatrix synthesize_sentence(const BlmSentence& sentence, const embed::SyntheticEmbeddingSpec& spec);

}  // namespace chunkloc::blm

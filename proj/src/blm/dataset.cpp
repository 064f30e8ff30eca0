#include "chunkloc/blm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/rng.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::blm {

namespace {

// A surface piece: entry choice[slot] of lexicon slot `lexicon_slot`.
struct Piece {
  std::string lexicon_slot;
  std::size_t slot;
};

namespace agr {
constexpr std::size_t noun = 0, verb = 1, coord_noun = 2, coord = 3, prep1 = 4, pp1 = 5, prep2 = 6, pp2 = 7;
}
namespace alt {
constexpr std::size_t agent = 0, theme = 1, location = 2, verb = 3, prep_agent = 4, prep_theme = 5,
                      prep_loc = 6, prep_wrong = 7, prep_emb = 8;
}

bool is_agreement(BlmTask task) { return task == BlmTask::agreement; }

[[noreturn]] void unknown_label(BlmTask task, std::string_view label) {
  throw ConfigError("label '" + std::string(label) + "' is not part of the " + std::string(to_string(task)) +
                    " task");
}

std::size_t role_slot(BlmTask task, std::string_view role, std::string_view label) {
  if (role == "agent") return alt::agent;
  if (role == "theme") return alt::theme;
  if (role == "loc") return alt::location;
  unknown_label(task, label);
}

std::string_view role_entry(std::size_t slot) {
  return slot == alt::agent ? "agent" : slot == alt::theme ? "theme" : "location";
}

std::vector<Piece> pieces(BlmTask task, std::string_view label) {
  const std::string l(label);
  if (is_agreement(task)) {
    if (l == "np-sg" || l == "np-pl") return {{l, agr::noun}};
    if (l == "vp-sg" || l == "vp-pl") return {{l, agr::verb}};
    if (l == "pp1-sg" || l == "pp1-pl") return {{"prep1", agr::prep1}, {l, agr::pp1}};
    if (l == "pp2-sg" || l == "pp2-pl") return {{"prep2", agr::prep2}, {l, agr::pp2}};
    if (l == "coord") return {{"coord", agr::coord}, {"np-sg", agr::coord_noun}};
    unknown_label(task, label);
  }
  if (l == "verb-act" || l == "verb-pass") return {{l, alt::verb}};
  const auto parts = text::split(label, '-');
  if (parts.size() == 2 && parts[0] == "np") {
    const auto r = role_slot(task, parts[1], label);
    return {{std::string(role_entry(r)), r}};
  }
  if (parts.size() == 2 && parts[0] == "pp") {
    const auto r = role_slot(task, parts[1], label);
    const std::size_t prep = r == alt::agent ? alt::prep_agent : r == alt::theme ? alt::prep_theme : alt::prep_loc;
    const std::string prep_name = r == alt::agent ? "prep-agent" : r == alt::theme ? "prep-theme" : "prep-loc";
    return {{prep_name, prep}, {std::string(role_entry(r)), r}};
  }
  if (parts.size() == 2 && parts[0] == "ppx") {
    const auto r = role_slot(task, parts[1], label);
    return {{"prep-wrong", alt::prep_wrong}, {std::string(role_entry(r)), r}};
  }
  if (parts.size() == 3 && parts[0] == "npx") {
    const auto a = role_slot(task, parts[1], label);
    const auto b = role_slot(task, parts[2], label);
    return {{std::string(role_entry(a)), a}, {"prep-emb", alt::prep_emb}, {std::string(role_entry(b)), b}};
  }
  unknown_label(task, label);
}

bool is_content(const Piece& p) { return p.lexicon_slot.rfind("prep", 0) != 0 && p.lexicon_slot != "coord"; }

std::set<std::string> task_labels(BlmTask task) {
  std::set<std::string> out;
  const auto& t = BlmTemplate::of(task);
  for (const auto& row : t.context) {
    out.insert(row.begin(), row.end());
  }
  for (const auto& a : t.answers) {
    out.insert(a.labels.begin(), a.labels.end());
  }
  return out;
}

std::vector<std::string> instance_texts(BlmTask task, const BlmTemplate& tmpl, const grammar::Lexicon& lexicon,
                                        Variation variation, const std::vector<LexicalSlot>& slots, Rng& rng) {
  LexicalChoice base(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    base[s] = rng.below(slots[s].size);
  }
  std::vector<std::size_t> varying;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s].size > 1) {
      varying.push_back(s);
    }
  }
  auto sentence_choice = [&]() {
    LexicalChoice c = base;
    if (variation == Variation::II) {
      auto pick = varying;
      const std::size_t k = std::min<std::size_t>(2, pick.size());
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(pick[i], pick[i + rng.below(pick.size() - i)]);
        c[pick[i]] = rng.below(slots[pick[i]].size);
      }
    } else if (variation == Variation::III) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        c[s] = rng.below(slots[s].size);
      }
    }
    return c;
  };
  std::vector<std::string> texts;
  for (const auto& row : tmpl.context) {
    texts.push_back(realize(task, row, sentence_choice(), lexicon));
  }
  for (const auto& a : tmpl.answers) {
    texts.push_back(realize(task, a.labels, sentence_choice(), lexicon));
  }
  return texts;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return in;
}

bool same_tag_set(std::vector<std::string> tags, BlmTask task) {
  auto expected = answer_tags(task);
  std::sort(tags.begin(), tags.end());
  std::sort(expected.begin(), expected.end());
  return tags == expected;
}

}  // namespace

std::vector<LexicalSlot> lexical_slots(BlmTask task, const grammar::Lexicon& lexicon) {
  auto aligned = [&](std::string_view a, std::string_view b) {
    lexicon.require({a, b});
    if (lexicon.size(a) != lexicon.size(b)) {
      throw ConfigError("lexicon slots '" + std::string(a) + "' and '" + std::string(b) +
                        "' must have the same number of entries");
    }
    return lexicon.size(a);
  };
  auto single = [&](std::string_view a) {
    lexicon.require({a});
    return lexicon.size(a);
  };
  if (is_agreement(task)) {
    return {{"noun", aligned("np-sg", "np-pl")}, {"verb", aligned("vp-sg", "vp-pl")},
            {"coord-noun", single("np-sg")},     {"coord", single("coord")},
            {"prep1", single("prep1")},          {"pp1", aligned("pp1-sg", "pp1-pl")},
            {"prep2", single("prep2")},          {"pp2", aligned("pp2-sg", "pp2-pl")}};
  }
  return {{"agent", single("agent")},           {"theme", single("theme")},
          {"location", single("location")},     {"verb", aligned("verb-act", "verb-pass")},
          {"prep-agent", single("prep-agent")}, {"prep-theme", single("prep-theme")},
          {"prep-loc", single("prep-loc")},     {"prep-wrong", single("prep-wrong")},
          {"prep-emb", single("prep-emb")}};
}

std::string realize(BlmTask task, const LabelSequence& labels, const LexicalChoice& choice,
                    const grammar::Lexicon& lexicon) {
  std::vector<std::string> words;
  for (const auto& label : labels) {
    for (const auto& p : pieces(task, label)) {
      if (p.slot >= choice.size()) {
        throw ParameterError("lexical choice has no entry for slot " + std::to_string(p.slot));
      }
      const auto& entries = lexicon.entries(p.lexicon_slot);
      if (choice[p.slot] >= entries.size()) {
        throw ParameterError("lexical choice out of range for slot '" + p.lexicon_slot + "'");
      }
      words.push_back(entries[choice[p.slot]]);
    }
  }
  return text::join(words, " ");
}

Recognizer::Recognizer(BlmTask task, const grammar::Lexicon& lexicon) {
  const auto slots = lexical_slots(task, lexicon);
  for (const auto& label : task_labels(task)) {
    const auto ps = pieces(task, label);
    std::vector<std::size_t> idx(ps.size(), 0);
    while (true) {
      Form f;
      f.label = label;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        for (const auto w : text::split_whitespace(lexicon.entries(ps[i].lexicon_slot)[idx[i]])) {
          f.words.emplace_back(w);
        }
        if (is_content(ps[i])) {
          f.items.push_back({slots[ps[i].slot].name, idx[i]});
        }
      }
      forms_.push_back(std::move(f));
      std::size_t d = 0;
      while (d < ps.size() && ++idx[d] == lexicon.size(ps[d].lexicon_slot)) {
        idx[d++] = 0;
      }
      if (d == ps.size()) {
        break;
      }
    }
  }
}

std::optional<Recognition> Recognizer::parse(std::string_view sentence) const {
  const auto tokens = text::split_whitespace(sentence);
  Recognition out;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    const Form* best = nullptr;
    bool ambiguous = false;
    for (const auto& f : forms_) {
      if (f.words.size() > tokens.size() - pos) {
        continue;
      }
      bool match = true;
      for (std::size_t i = 0; i < f.words.size() && match; ++i) {
        match = tokens[pos + i] == f.words[i];
      }
      if (!match) {
        continue;
      }
      if (best == nullptr || f.words.size() > best->words.size()) {
        best = &f;
        ambiguous = false;
      } else if (f.words.size() == best->words.size() && f.label != best->label) {
        ambiguous = true;
      }
    }
    if (best == nullptr || ambiguous) {
      return std::nullopt;
    }
    out.labels.push_back(best->label);
    out.items.insert(out.items.end(), best->items.begin(), best->items.end());
    pos += best->words.size();
  }
  return out;
}

std::uint64_t SentencePool::intern(const std::string& text, const LabelSequence& labels) {
  if (const auto it = by_text_.find(text); it != by_text_.end()) {
    if (sentences_[it->second].labels != labels) {
      throw DataError("sentence '" + text + "' realizes two different label sequences");
    }
    return it->second;
  }
  const std::uint64_t id = sentences_.size();
  sentences_.push_back({id, text, labels, grammar::Split::train});
  by_text_.emplace(text, id);
  return id;
}

std::vector<BlmInstance> generate_blm(const BlmTemplate& tmpl, const grammar::Lexicon& lexicon, std::size_t n,
                                      Variation variation, std::uint64_t seed, SentencePool& pool) {
  const auto slots = lexical_slots(tmpl.task, lexicon);
  Rng rng(combine_seeds(seed, 0xb1a0));
  std::set<std::vector<std::string>> seen;
  std::vector<BlmInstance> out;
  out.reserve(n);
  const std::size_t max_attempts = 100 * n + 1000;
  std::size_t attempts = 0;
  std::vector<const LabelSequence*> label_rows;
  for (const auto& row : tmpl.context) {
    label_rows.push_back(&row);
  }
  for (const auto& a : tmpl.answers) {
    label_rows.push_back(&a.labels);
  }
  while (out.size() < n) {
    if (++attempts > max_attempts) {
      throw DataError("lexicon supports fewer than " + std::to_string(n) + " distinct " +
                      std::string(to_string(tmpl.task)) + " instances of variation " +
                      std::string(to_string(variation)));
    }
    auto texts = instance_texts(tmpl.task, tmpl, lexicon, variation, slots, rng);
    auto key = texts;
    std::sort(key.begin() + kContextRows, key.end());
    if (!seen.insert(std::move(key)).second) {
      continue;
    }
    std::vector<std::uint64_t> ids;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      ids.push_back(pool.intern(texts[i], *label_rows[i]));
    }
    BlmInstance inst;
    std::copy_n(ids.begin(), kContextRows, inst.context.begin());
    std::vector<std::size_t> order(tmpl.answers.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      inst.candidates.push_back(ids[kContextRows + order[pos]]);
      inst.tags.push_back(tmpl.answers[order[pos]].tag);
      if (order[pos] == tmpl.correct_index) {
        inst.correct_index = pos;
      }
    }
    inst.variation = variation;
    out.push_back(std::move(inst));
  }
  return out;
}

BlmCounts BlmCounts::table_defaults(BlmTask task, Variation variation) {
  BlmCounts c;
  const std::size_t v = static_cast<std::size_t>(variation);
  static constexpr std::size_t kAgreementTest[] = {252, 4866, 4869};
  static constexpr std::size_t kAlternationTest[] = {375, 1500, 1500};
  c.test = is_agreement(task) ? kAgreementTest[v] : kAlternationTest[v];
  return c;
}

BlmDataset generate_dataset(BlmTask task, const grammar::Lexicon& lexicon, const BlmCounts& counts,
                            Variation variation, std::uint64_t seed) {
  if (!(counts.dev_fraction >= 0.0 && counts.dev_fraction < 1.0)) {
    throw ParameterError("dev fraction must lie in [0, 1)");
  }
  SentencePool pool;
  auto all = generate_blm(BlmTemplate::of(task), lexicon, counts.train + counts.test, variation, seed, pool);
  const auto dev = static_cast<std::size_t>(std::llround(counts.dev_fraction * static_cast<double>(counts.train)));
  BlmDataset ds;
  ds.task = task;
  const std::array<std::size_t, 3> sizes{counts.train - dev, dev, counts.test};
  std::size_t next = 0;
  std::vector<bool> assigned(pool.sentences().size(), false);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < sizes[s]; ++i, ++next) {
      const auto& inst = all[next];
      auto mark = [&](std::uint64_t id) {
        if (!assigned[id]) {
          assigned[id] = true;
          pool.sentences()[id].split = static_cast<grammar::Split>(s);
        }
      };
      std::for_each(inst.context.begin(), inst.context.end(), mark);
      std::for_each(inst.candidates.begin(), inst.candidates.end(), mark);
      ds.splits[s].push_back(inst);
    }
  }
  ds.sentences = std::move(pool.sentences());
  return ds;
}

std::unordered_map<std::uint64_t, const BlmSentence*> index_sentences(std::span<const BlmSentence> sentences) {
  std::unordered_map<std::uint64_t, const BlmSentence*> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    out.emplace(s.id, &s);
  }
  return out;
}

void validate_instance(const BlmInstance& inst, BlmTask task,
                       const std::unordered_map<std::uint64_t, const BlmSentence*>& sentences,
                       const Recognizer& recognizer) {
  const auto& tmpl = BlmTemplate::of(task);
  if (inst.candidates.size() != tmpl.answers.size() || inst.tags.size() != inst.candidates.size()) {
    throw DataError("instance has " + std::to_string(inst.candidates.size()) + " candidates, expected " +
                    std::to_string(tmpl.answers.size()));
  }
  if (!same_tag_set(inst.tags, task)) {
    throw DataError("instance tags do not match the " + std::string(to_string(task)) + " answer set");
  }
  if (inst.correct_index >= inst.tags.size() || inst.tags[inst.correct_index] != tmpl.correct().tag) {
    throw DataError("correct index does not point at the correct answer");
  }
  auto check = [&](std::uint64_t id, const LabelSequence& expected, const std::string& where) {
    const auto it = sentences.find(id);
    if (it == sentences.end()) {
      throw DataError("no sentence with id " + std::to_string(id));
    }
    if (it->second->labels != expected) {
      throw DataError(where + " is labelled '" + join_labels(it->second->labels) + "', expected '" +
                      join_labels(expected) + "'");
    }
    const auto parsed = recognizer.parse(it->second->text);
    if (!parsed || parsed->labels != expected) {
      throw DataError(where + " text '" + it->second->text + "' does not realize '" + join_labels(expected) + "'");
    }
  };
  for (std::size_t r = 0; r < kContextRows; ++r) {
    check(inst.context[r], tmpl.context[r], "context row " + std::to_string(r + 1));
  }
  for (std::size_t c = 0; c < inst.candidates.size(); ++c) {
    const auto spec = std::find_if(tmpl.answers.begin(), tmpl.answers.end(),
                                   [&](const CandidateSpec& a) { return a.tag == inst.tags[c]; });
    check(inst.candidates[c], spec->labels, "candidate " + inst.tags[c]);
  }
}

void write_blm_sentences(std::ostream& out, std::span<const BlmSentence> sentences) {
  for (const auto& s : sentences) {
    out << s.id << '\t' << s.text << '\t' << join_labels(s.labels) << '\t' << grammar::to_string(s.split)
        << '\n';
  }
}

std::vector<BlmSentence> read_blm_sentences(std::istream& in) {
  std::vector<BlmSentence> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 4) {
      throw FormatError("BLM sentence line needs 4 tab-separated fields, got " + std::to_string(fields.size()),
                        lineno);
    }
    BlmSentence s;
    s.id = text::parse_u64(fields[0], lineno);
    s.text = std::string(fields[1]);
    s.labels = split_labels(fields[2]);
    if (s.labels.empty()) {
      throw FormatError("BLM sentence has no labels", lineno);
    }
    try {
      s.split = grammar::parse_split(fields[3]);
    } catch (const ConfigError& e) {
      throw FormatError(e.what(), lineno);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_blm_sentences(const std::filesystem::path& path, std::span<const BlmSentence> sentences) {
  auto out = open_out(path);
  write_blm_sentences(out, sentences);
}

std::vector<BlmSentence> read_blm_sentences(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_blm_sentences(in);
}

void write_blm(std::ostream& out, std::optional<BlmTask> task, std::span<const BlmInstance> instances) {
  if (task) {
    out << "#task=" << to_string(*task) << '\n';
  }
  for (const auto& inst : instances) {
    for (const auto id : inst.context) {
      out << id << '\t';
    }
    out << inst.candidates.size();
    for (const auto id : inst.candidates) {
      out << '\t' << id;
    }
    for (const auto& tag : inst.tags) {
      out << '\t' << tag;
    }
    out << '\t' << inst.correct_index << '\t' << to_string(inst.variation) << '\n';
  }
}

void write_blm(const std::filesystem::path& path, std::optional<BlmTask> task,
               std::span<const BlmInstance> instances) {
  auto out = open_out(path);
  write_blm(out, task, instances);
}

BlmFile load_blm(std::istream& in, std::optional<BlmTask> expected) {
  BlmFile file;
  file.task = expected;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      constexpr std::string_view kHeader = "#task=";
      if (line.rfind(kHeader, 0) == 0) {
        BlmTask header;
        try {
          header = parse_task(text::trim(std::string_view(line).substr(kHeader.size())));
        } catch (const ConfigError& e) {
          throw FormatError(e.what(), lineno);
        }
        if (expected && *expected != header) {
          throw FormatError("file declares task " + std::string(to_string(header)) + ", expected " +
                                std::string(to_string(*expected)),
                            lineno);
        }
        file.task = header;
      }
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() < kContextRows + 1) {
      throw FormatError("BLM instance line is truncated", lineno);
    }
    const auto k = static_cast<std::size_t>(text::parse_u64(fields[kContextRows], lineno));
    if (file.task && k != candidate_count(*file.task)) {
      throw FormatError("task " + std::string(to_string(*file.task)) + " expects " +
                            std::to_string(candidate_count(*file.task)) + " candidates, got " + std::to_string(k),
                        lineno);
    }
    if (!file.task && k != candidate_count(BlmTask::agreement) && k != candidate_count(BlmTask::alt_atl)) {
      throw FormatError("candidate count " + std::to_string(k) + " matches no BLM task (expected 8 or 9)", lineno);
    }
    if (fields.size() != kContextRows + 3 + 2 * k) {
      throw FormatError("BLM instance line with " + std::to_string(k) + " candidates needs " +
                            std::to_string(kContextRows + 3 + 2 * k) + " fields, got " +
                            std::to_string(fields.size()),
                        lineno);
    }
    BlmInstance inst;
    for (std::size_t r = 0; r < kContextRows; ++r) {
      inst.context[r] = text::parse_u64(fields[r], lineno);
    }
    for (std::size_t c = 0; c < k; ++c) {
      inst.candidates.push_back(text::parse_u64(fields[kContextRows + 1 + c], lineno));
      inst.tags.emplace_back(fields[kContextRows + 1 + k + c]);
    }
    inst.correct_index = static_cast<std::size_t>(text::parse_u64(fields[kContextRows + 1 + 2 * k], lineno));
    if (inst.correct_index >= k) {
      throw FormatError("correct index out of range", lineno);
    }
    try {
      inst.variation = parse_variation(fields[kContextRows + 2 + 2 * k]);
    } catch (const ConfigError& e) {
      throw FormatError(e.what(), lineno);
    }
    const BlmTask row_task = file.task.value_or(k == candidate_count(BlmTask::agreement) ? BlmTask::agreement
                                                                                         : BlmTask::alt_atl);
    if (!same_tag_set(inst.tags, row_task)) {
      throw FormatError("error tags do not match the " + std::string(to_string(row_task)) + " answer set", lineno);
    }
    if (inst.tags[inst.correct_index] != correct_tag(row_task)) {
      throw FormatError("correct index points at tag '" + inst.tags[inst.correct_index] + "'", lineno);
    }
    file.instances.push_back(std::move(inst));
  }
  return file;
}

BlmFile load_blm(const std::filesystem::path& path, std::optional<BlmTask> expected) {
  auto in = open_in(path);
  return load_blm(in, expected);
}

embed::SyntheticEmbeddingSpec blm_layout(BlmTask task, std::uint64_t seed) {
  return embed::SyntheticEmbeddingSpec::default_layout(seed, aux_features(task));
}

embed::EmbeddingMatrix synthesize_sentence(const BlmSentence& sentence, const embed::SyntheticEmbeddingSpec& spec) {
  const auto features = embed::features_for_labels(sentence.labels);
  return embed::synthesize_features(features, embed::lexical_key_for_text(sentence.text), spec);
}

}  // namespace chunkloc::blm

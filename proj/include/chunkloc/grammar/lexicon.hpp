#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chunkloc::grammar {

// Surface strings keyed by slot name. Slots used by the sentence grammar:
//   np-sg np-pl pp1-sg pp1-pl pp2-sg pp2-pl vp-sg vp-pl prep1 prep2
// Slots used by the verb-alternation BLM templates:
//   agent theme location verb-act verb-pass
//   prep-theme prep-loc prep-agent prep-wrong prep-emb
// plus "coord" (the coordinating word) for the agreement templates.
//
// File format: one entry per line, "<slot><whitespace><surface string>";
// '#' starts a comment line. Entries of the sg/pl slots of one chunk kind are
// aligned by position (entry i of np-sg and np-pl share a lemma).
class Lexicon {
 public:
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);

  // Throws ConfigError on duplicates within the slot.
  void add(const std::string& slot, std::string entry);

  bool has(std::string_view slot) const;
  // Throws ConfigError naming the slot if it is missing or empty.
  const std::vector<std::string>& entries(std::string_view slot) const;
  std::size_t size(std::string_view slot) const;

  // Throws ConfigError naming the first empty required slot.
  void require(std::initializer_list<std::string_view> slots) const;
  void require_sentence_slots() const;

  const std::map<std::string, std::vector<std::string>, std::less<>>& slots() const {
    return slots_;
  }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> slots_;
};

}  // namespace chunkloc::grammar

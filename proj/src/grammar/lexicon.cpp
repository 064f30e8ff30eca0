#include "chunkloc/grammar/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::grammar {

Lexicon Lexicon::parse(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = text::trim(line);
    if (view.empty() || view.front() == '#') {
      continue;
    }
    const auto sep = view.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw FormatError("lexicon line has a slot but no entry", lineno);
    }
    lex.add(std::string(view.substr(0, sep)), std::string(text::trim(view.substr(sep))));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open lexicon " + path.string());
  }
  return parse(in);
}

void Lexicon::add(const std::string& slot, std::string entry) {
  auto& list = slots_[slot];
  if (std::find(list.begin(), list.end(), entry) != list.end()) {
    throw ConfigError("duplicate entry '" + entry + "' in lexicon slot '" + slot + "'");
  }
  list.push_back(std::move(entry));
}

bool Lexicon::has(std::string_view slot) const {
  const auto it = slots_.find(slot);
  return it != slots_.end() && !it->second.empty();
}

const std::vector<std::string>& Lexicon::entries(std::string_view slot) const {
  const auto it = slots_.find(slot);
  if (it == slots_.end() || it->second.empty()) {
    throw ConfigError("lexicon slot '" + std::string(slot) + "' is empty");
  }
  return it->second;
}

std::size_t Lexicon::size(std::string_view slot) const {
  const auto it = slots_.find(slot);
  return it == slots_.end() ? 0 : it->second.size();
}

void Lexicon::require(std::initializer_list<std::string_view> slots) const {
  for (const auto slot : slots) {
    entries(slot);
  }
}

void Lexicon::require_sentence_slots() const {
  require({"np-sg", "np-pl", "pp1-sg", "pp1-pl", "pp2-sg", "pp2-pl", "vp-sg", "vp-pl", "prep1",
           "prep2"});
}

}  // namespace chunkloc::grammar

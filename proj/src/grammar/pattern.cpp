#include "chunkloc/grammar/pattern.hpp"

#include <algorithm>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::grammar {

std::string_view to_string(ChunkKind kind) {
  switch (kind) {
    case ChunkKind::np: return "np";
    case ChunkKind::pp1: return "pp1";
    case ChunkKind::pp2: return "pp2";
    case ChunkKind::vp: return "vp";
  }
  return "?";
}

std::string_view to_string(GramNumber number) { return number == GramNumber::sg ? "sg" : "pl"; }

GramNumber flip(GramNumber number) {
  return number == GramNumber::sg ? GramNumber::pl : GramNumber::sg;
}

std::string Chunk::label() const {
  std::string out(to_string(kind));
  out += '-';
  out += to_string(number);
  return out;
}

bool ChunkPattern::is_valid(std::span<const Chunk> chunks) {
  static constexpr ChunkKind kLayouts[3][4] = {
      {ChunkKind::np, ChunkKind::vp},
      {ChunkKind::np, ChunkKind::pp1, ChunkKind::vp},
      {ChunkKind::np, ChunkKind::pp1, ChunkKind::pp2, ChunkKind::vp},
  };
  if (chunks.size() < 2 || chunks.size() > 4) {
    return false;
  }
  const auto& layout = kLayouts[chunks.size() - 2];
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].kind != layout[i]) {
      return false;
    }
  }
  return chunks.front().number == chunks.back().number;
}

ChunkPattern ChunkPattern::from_chunks(std::vector<Chunk> chunks) {
  if (!is_valid(chunks)) {
    std::vector<std::string> labels;
    for (const auto& c : chunks) {
      labels.push_back(c.label());
    }
    throw ConfigError("invalid chunk pattern '" + text::join(labels, " ") + "'");
  }
  return ChunkPattern(std::move(chunks));
}

ChunkPattern ChunkPattern::parse(std::string_view text) {
  std::vector<Chunk> chunks;
  for (const auto token : text::split_whitespace(text)) {
    const auto dash = token.find('-');
    if (dash == std::string_view::npos) {
      throw ConfigError("malformed chunk label '" + std::string(token) + "'");
    }
    const auto kind_text = token.substr(0, dash);
    const auto number_text = token.substr(dash + 1);
    Chunk chunk{};
    if (kind_text == "np") {
      chunk.kind = ChunkKind::np;
    } else if (kind_text == "pp1") {
      chunk.kind = ChunkKind::pp1;
    } else if (kind_text == "pp2") {
      chunk.kind = ChunkKind::pp2;
    } else if (kind_text == "vp") {
      chunk.kind = ChunkKind::vp;
    } else {
      throw ConfigError("unknown chunk kind '" + std::string(kind_text) + "'");
    }
    if (number_text == "sg") {
      chunk.number = GramNumber::sg;
    } else if (number_text == "pl") {
      chunk.number = GramNumber::pl;
    } else {
      throw ConfigError("unknown grammatical number '" + std::string(number_text) + "'");
    }
    chunks.push_back(chunk);
  }
  return from_chunks(std::move(chunks));
}

std::string ChunkPattern::str() const { return text::join(labels(), " "); }

std::vector<std::string> ChunkPattern::labels() const {
  std::vector<std::string> out;
  out.reserve(chunks_.size());
  for (const auto& c : chunks_) {
    out.push_back(c.label());
  }
  return out;
}

std::strong_ordering operator<=>(const ChunkPattern& a, const ChunkPattern& b) {
  if (auto c = a.chunks_.size() <=> b.chunks_.size(); c != 0) {
    return c;
  }
  for (std::size_t i = 0; i < a.chunks_.size(); ++i) {
    if (auto c = a.chunks_[i].number <=> b.chunks_[i].number; c != 0) {
      return c;
    }
  }
  return std::strong_ordering::equal;
}

const std::vector<ChunkPattern>& enumerate_patterns() {
  static const std::vector<ChunkPattern> patterns = [] {
    std::vector<ChunkPattern> out;
    constexpr GramNumber kNumbers[] = {GramNumber::sg, GramNumber::pl};
    for (std::size_t pps = 0; pps <= 2; ++pps) {
      // Numbers of the subject/verb and of up to two PPs.
      const std::size_t combos = std::size_t{2} << pps;
      for (std::size_t code = 0; code < combos; ++code) {
        std::vector<Chunk> chunks;
        const GramNumber subject = kNumbers[(code >> pps) & 1];
        chunks.push_back({ChunkKind::np, subject});
        for (std::size_t p = 0; p < pps; ++p) {
          const auto kind = p == 0 ? ChunkKind::pp1 : ChunkKind::pp2;
          chunks.push_back({kind, kNumbers[(code >> (pps - 1 - p)) & 1]});
        }
        chunks.push_back({ChunkKind::vp, subject});
        out.push_back(ChunkPattern::from_chunks(std::move(chunks)));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }();
  return patterns;
}

std::size_t pattern_index(const ChunkPattern& pattern) {
  const auto& all = enumerate_patterns();
  const auto it = std::lower_bound(all.begin(), all.end(), pattern);
  return static_cast<std::size_t>(it - all.begin());
}

std::string_view to_string(PairKind kind) {
  switch (kind) {
    case PairKind::length: return "length";
    case PairKind::gram_number: return "gram_number";
    case PairKind::subj_verb: return "subj_verb";
  }
  return "?";
}

PairKind parse_pair_kind(std::string_view text) {
  for (const auto kind : kAllPairKinds) {
    if (text == to_string(kind)) {
      return kind;
    }
  }
  throw ConfigError("unknown pair kind '" + std::string(text) + "'");
}

namespace {

std::vector<Chunk> delete_pp(std::span<const Chunk> chunks, std::size_t position) {
  std::vector<Chunk> out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i != position) {
      out.push_back(chunks[i]);
    }
  }
  // The surviving PP becomes the first PP.
  if (out.size() == 3) {
    out[1].kind = ChunkKind::pp1;
  }
  return out;
}

}  // namespace

std::vector<MinimalPair> minimal_pairs(PairKind kind) {
  const auto& patterns = enumerate_patterns();
  std::vector<MinimalPair> out;
  switch (kind) {
    case PairKind::length:
      for (const auto& longer : patterns) {
        std::vector<ChunkPattern> shorter;
        for (std::size_t pos = 1; pos + 1 < longer.length(); ++pos) {
          auto candidate = ChunkPattern::from_chunks(delete_pp(longer.chunks(), pos));
          if (std::find(shorter.begin(), shorter.end(), candidate) == shorter.end()) {
            shorter.push_back(std::move(candidate));
          }
        }
        std::sort(shorter.begin(), shorter.end());
        for (auto& p1 : shorter) {
          out.push_back({kind, std::move(p1), longer});
        }
      }
      break;
    case PairKind::gram_number:
      for (const auto& p1 : patterns) {
        for (std::size_t pos = 1; pos + 1 < p1.length(); ++pos) {
          if (p1.chunks()[pos].number != GramNumber::sg) {
            continue;
          }
          std::vector<Chunk> chunks(p1.chunks().begin(), p1.chunks().end());
          chunks[pos].number = GramNumber::pl;
          out.push_back({kind, p1, ChunkPattern::from_chunks(std::move(chunks))});
        }
      }
      break;
    case PairKind::subj_verb:
      for (const auto& p1 : patterns) {
        if (p1.subject_number() != GramNumber::sg) {
          continue;
        }
        std::vector<Chunk> chunks(p1.chunks().begin(), p1.chunks().end());
        chunks.front().number = GramNumber::pl;
        chunks.back().number = GramNumber::pl;
        out.push_back({kind, p1, ChunkPattern::from_chunks(std::move(chunks))});
      }
      break;
  }
  return out;
}

}  // namespace chunkloc::grammar

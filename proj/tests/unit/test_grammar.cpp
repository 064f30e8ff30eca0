#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chunkloc/grammar/dataset.hpp"
#include "chunkloc/grammar/lexicon.hpp"
#include "chunkloc/grammar/pattern.hpp"
#include "chunkloc/util/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "grammar_oracle.hpp"

using namespace chunkloc;
using namespace chunkloc::grammar;
using chunkloc::testing::brute_force_pairs;
using chunkloc::testing::brute_force_patterns;
using chunkloc::testing::implemented_pairs;

namespace {

Lexicon lexicon_from(const std::map<std::string, std::vector<std::string>>& slots) {
  Lexicon lex;
  for (const auto& [slot, entries] : slots) {
    for (const auto& e : entries) {
      lex.add(slot, e);
    }
  }
  return lex;
}

}  // namespace

TEST_CASE("exactly 14 patterns, split by length as 2/4/8") {
  const auto& ps = enumerate_patterns();
  REQUIRE(ps.size() == 14);
  std::map<std::size_t, std::size_t> by_length;
  for (const auto& p : ps) {
    ++by_length[p.length()];
  }
  CHECK(by_length == std::map<std::size_t, std::size_t>{{2, 2}, {3, 4}, {4, 8}});
  CHECK(brute_force_patterns().size() == 14);
  CHECK(std::is_sorted(ps.begin(), ps.end()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(pattern_index(ps[i]) == i);
    CHECK(ChunkPattern::parse(ps[i].str()) == ps[i]);
  }
}

TEST_CASE("pattern parsing rejects disagreement and bad labels") {
  CHECK_THROWS_AS(ChunkPattern::parse("np-sg vp-pl"), ConfigError);
  CHECK_THROWS_AS(ChunkPattern::parse("np-sg pp2-sg vp-sg"), ConfigError);
  CHECK_THROWS_AS(ChunkPattern::parse("np-xx vp-xx"), ConfigError);
  CHECK_THROWS_AS(ChunkPattern::parse("vp-sg np-sg"), ConfigError);
  CHECK(ChunkPattern::parse("np-pl pp1-sg vp-pl").subject_number() == GramNumber::pl);
}

TEST_CASE("minimal pairs match a brute-force enumeration") {
  CHECK(minimal_pairs(PairKind::gram_number).size() == 10);
  CHECK(minimal_pairs(PairKind::subj_verb).size() == 7);
  for (const auto kind : kAllPairKinds) {
    CAPTURE(to_string(kind));
    CHECK(implemented_pairs(kind) == brute_force_pairs(kind));
    const auto& ps = enumerate_patterns();
    for (const auto& mp : minimal_pairs(kind)) {
      CHECK(std::find(ps.begin(), ps.end(), mp.p1) != ps.end());
      CHECK(std::find(ps.begin(), ps.end(), mp.p2) != ps.end());
    }
  }
}

TEST_CASE("sentence counts follow the slot-size products") {
  std::map<std::string, std::vector<std::string>> one{
      {"np-sg", {"the cat"}}, {"np-pl", {"the cats"}}, {"vp-sg", {"sleeps"}}, {"vp-pl", {"sleep"}},
      {"pp1-sg", {"the box"}}, {"pp1-pl", {"the boxes"}}, {"pp2-sg", {"the tree"}},
      {"pp2-pl", {"the trees"}}, {"prep1", {"near"}}, {"prep2", {"above"}}};
  const auto lex1 = lexicon_from(one);
  CHECK(expected_sentence_count(lex1) == 14);
  CHECK(generate_sentences(lex1, 1).size() == 14);

  auto two = one;
  two["np-sg"] = {"the cat", "the dog"};
  two["np-pl"] = {"the cats", "the dogs"};
  two["vp-sg"] = {"sleeps", "runs"};
  two["vp-pl"] = {"sleep", "run"};
  const auto lex2 = lexicon_from(two);
  std::map<std::string, std::size_t> per_pattern;
  for (const auto& r : generate_sentences(lex2, 1)) {
    ++per_pattern[r.pattern.str()];
  }
  CHECK(per_pattern["np-sg vp-sg"] == 4);
  CHECK(per_pattern["np-pl vp-pl"] == 4);
  CHECK(expected_sentence_count(lex2) == 14 * 4);

  CHECK(expected_sentence_count(testing::default_lexicon()) == 14336);
}

TEST_CASE("a missing lexicon slot is named in the error") {
  std::map<std::string, std::vector<std::string>> slots{
      {"np-sg", {"the cat"}}, {"np-pl", {"the cats"}}, {"vp-sg", {"sleeps"}}, {"vp-pl", {"sleep"}}};
  const auto lex = lexicon_from(slots);
  try {
    generate_sentences(lex, 1);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("pp1") != std::string::npos);
  }
}

TEST_CASE("default dataset: 14336 sentences, 4004 instances, 2576:630:798") {
  const auto& lex = testing::default_lexicon();
  auto records = generate_sentences(lex, 1);
  REQUIRE(records.size() == 14336);
  std::set<std::string> texts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].id == i);
    texts.insert(records[i].text);
  }
  CHECK(texts.size() == records.size());

  const auto set = build_instances(records, 4004, 1);
  CHECK(set.of(Split::train).size() == 2576);
  CHECK(set.of(Split::dev).size() == 630);
  CHECK(set.of(Split::test).size() == 798);
  CHECK(apportion(4004, {}) == std::array<std::size_t, 3>{2576, 630, 798});

  std::map<std::uint64_t, const SentenceRecord*> by_id;
  for (const auto& r : set.records) {
    by_id[r.id] = &r;
  }
  std::map<std::size_t, std::size_t> per_pattern;
  for (std::size_t s = 0; s < 3; ++s) {
    for (const auto& inst : set.splits[s]) {
      const auto& input = *by_id.at(inst.input_id);
      CHECK(static_cast<std::size_t>(input.split) == s);
      ++per_pattern[pattern_index(input.pattern)];
      std::set<std::size_t> cand_patterns;
      for (std::size_t c = 0; c < kCandidates; ++c) {
        const auto& cand = *by_id.at(inst.candidate_ids[c]);
        CHECK(static_cast<std::size_t>(cand.split) == s);
        cand_patterns.insert(pattern_index(cand.pattern));
      }
      CHECK(cand_patterns.size() == kCandidates);
      const auto& correct = *by_id.at(inst.candidate_ids[inst.correct_index]);
      CHECK(correct.pattern == input.pattern);
      CHECK(correct.id != input.id);
    }
  }
  REQUIRE(per_pattern.size() == 14);
  for (const auto& [p, n] : per_pattern) {
    CHECK(n == 286);
  }
}

TEST_CASE("too few records for a pattern names the pattern") {
  auto records = generate_sentences(testing::default_lexicon(), 1);
  const auto target = enumerate_patterns().front();
  std::vector<SentenceRecord> kept;
  std::size_t left = 0;
  for (auto& r : records) {
    if (r.pattern == target && left++ >= 5) {
      continue;
    }
    kept.push_back(r);
  }
  try {
    build_instances(kept, 4004, 1);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(target.str()) != std::string::npos);
  }
  CHECK_THROWS_AS(build_instances(records, 4000, 1), ConfigError);
}

TEST_CASE("regeneration with the same seed is byte-identical") {
  const auto& lex = testing::default_lexicon();
  auto serialize = [&](std::uint64_t seed) {
    const auto set = build_instances(generate_sentences(lex, seed), 4004, seed);
    std::ostringstream out;
    write_sentences(out, set.records);
    for (const auto& s : set.splits) {
      write_instances(out, s);
    }
    return out.str();
  };
  const auto a = serialize(3);
  CHECK(a == serialize(3));
  CHECK(a != serialize(4));
}

TEST_CASE("sentence and instance files round-trip and report bad lines") {
  const auto set = build_instances(generate_sentences(testing::default_lexicon(), 2), 4004, 2);
  std::stringstream s;
  write_sentences(s, set.records);
  const auto back = read_sentences(s);
  REQUIRE(back.size() == set.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == set.records[i].id);
    CHECK(back[i].text == set.records[i].text);
    CHECK(back[i].pattern == set.records[i].pattern);
    CHECK(back[i].split == set.records[i].split);
  }
  std::stringstream inst;
  write_instances(inst, set.of(Split::test));
  const auto ib = read_instances(inst);
  REQUIRE(ib.size() == 798);
  for (std::size_t i = 0; i < ib.size(); ++i) {
    CHECK(ib[i].input_id == set.of(Split::test)[i].input_id);
    CHECK(ib[i].candidate_ids == set.of(Split::test)[i].candidate_ids);
    CHECK(ib[i].correct_index == set.of(Split::test)[i].correct_index);
  }
  std::istringstream bad("1\ta sentence\tnp-sg vp-sg\ttrain\n2\tbroken\n");
  try {
    read_sentences(bad);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.position() == 2);
  }
  std::istringstream bad_index("1\t2\t3\t4\t5\t6\t7\t8\t9\n");
  CHECK_THROWS_AS(read_instances(bad_index), FormatError);
}

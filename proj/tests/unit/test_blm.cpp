#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/ad/ops.hpp"
#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/blm/model.hpp"
#include "chunkloc/blm/template.hpp"
#include "chunkloc/util/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace chunkloc;
using namespace chunkloc::blm;
using grammar::Split;

namespace {

const grammar::Lexicon& lexicon() { return testing::default_lexicon(); }

grammar::Lexicon lexicon_without(std::string_view slot) {
  grammar::Lexicon lex;
  for (const auto& [name, entries] : lexicon().slots()) {
    if (name == slot) {
      continue;
    }
    for (const auto& e : entries) {
      lex.add(name, e);
    }
  }
  return lex;
}

BlmCounts small_counts(std::size_t train, std::size_t test) {
  BlmCounts c;
  c.train = train;
  c.test = test;
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double d = std::sqrt(dot(a, a)) * std::sqrt(dot(b, b));
  return d > 0.0 ? dot(a, b) / d : 0.0;
}

double kl_closed_form(std::span<const double> mu, std::span<const double> lv) {
  double s = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    s += -0.5 * (1.0 + lv[k] - mu[k] * mu[k] - std::exp(lv[k]));
  }
  return s;
}

void set_all(ad::Tensor t, double v) {
  auto values = t.mutable_value();
  std::fill(values.begin(), values.end(), v);
}

std::size_t distinct_items(const BlmInstance& inst, const std::unordered_map<std::uint64_t, const BlmSentence*>& by_id,
                           const Recognizer& rec) {
  std::set<LexicalItem> items;
  auto add = [&](std::uint64_t id) {
    const auto r = rec.parse(by_id.at(id)->text);
    REQUIRE(r.has_value());
    items.insert(r->items.begin(), r->items.end());
  };
  for (const auto id : inst.context) {
    add(id);
  }
  for (const auto id : inst.candidates) {
    add(id);
  }
  return items.size();
}

}  // namespace

TEST_CASE("agreement template follows the figure") {
  const auto& t = BlmTemplate::of(BlmTask::agreement);
  CHECK(join_labels(t.context[0]) == "np-sg pp1-sg vp-sg");
  CHECK(t.answers.size() == 8);
  CHECK(t.correct().tag == "correct");
  CHECK(join_labels(t.correct().labels) == "np-pl pp1-pl pp2-sg vp-pl");
  const auto ae_v = std::find_if(t.answers.begin(), t.answers.end(), [](const auto& a) { return a.tag == "AE_V"; });
  REQUIRE(ae_v != t.answers.end());
  CHECK(join_labels(ae_v->labels) == "np-pl pp1-pl pp2-pl vp-sg");
  // The verb number disagrees with the correct answer and with its own subject.
  CHECK(ae_v->labels.back() != t.correct().labels.back());
  CHECK(ae_v->labels.front() == t.correct().labels.front());
  CHECK(candidate_count(BlmTask::agreement) == 8);
  CHECK(candidate_count(BlmTask::alt_atl) == 9);
  CHECK(candidate_count(BlmTask::atl_alt) == 9);
  CHECK(correct_tag(BlmTask::alt_atl) == "Correct");
}

TEST_CASE("ATL-ALT exchanges theme and location in every label") {
  const auto& a = BlmTemplate::of(BlmTask::alt_atl);
  const auto& b = BlmTemplate::of(BlmTask::atl_alt);
  CHECK(join_labels(b.context[0]) == "np-agent verb-act np-theme pp-loc");
  CHECK(join_labels(b.correct().labels) == "np-agent verb-act np-loc pp-theme");
  REQUIRE(a.answers.size() == b.answers.size());
  for (std::size_t i = 0; i < a.answers.size(); ++i) {
    CHECK(a.answers[i].tag == b.answers[i].tag);
  }
  CHECK(parse_task("alternation-alt-atl") == BlmTask::alt_atl);
  CHECK_THROWS_AS(parse_task("nope"), ConfigError);
  CHECK(parse_variation("iii") == Variation::III);
  CHECK_THROWS_AS(parse_variation("IV"), ConfigError);
}

TEST_CASE("lexicon gaps name the slot") {
  for (const auto& [task, slot] : std::vector<std::pair<BlmTask, std::string>>{
           {BlmTask::agreement, "coord"}, {BlmTask::alt_atl, "prep-emb"}, {BlmTask::atl_alt, "location"}}) {
    const auto lex = lexicon_without(slot);
    try {
      lexical_slots(task, lex);
      FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(slot) != std::string::npos);
    }
    SentencePool pool;
    CHECK_THROWS_AS(generate_blm(BlmTemplate::of(task), lex, 5, Variation::I, 1, pool), ConfigError);
  }
}

TEST_CASE("table defaults") {
  CHECK(BlmCounts::table_defaults(BlmTask::agreement, Variation::I).test == 252);
  CHECK(BlmCounts::table_defaults(BlmTask::agreement, Variation::II).test == 4866);
  CHECK(BlmCounts::table_defaults(BlmTask::agreement, Variation::III).test == 4869);
  CHECK(BlmCounts::table_defaults(BlmTask::alt_atl, Variation::I).test == 375);
  CHECK(BlmCounts::table_defaults(BlmTask::atl_alt, Variation::III).test == 1500);
  CHECK(BlmCounts::table_defaults(BlmTask::alt_atl, Variation::II).train == 2000);
}

TEST_CASE("generated datasets: split sizes, determinism and distinct instances") {
  const auto a = generate_dataset(BlmTask::agreement, lexicon(), small_counts(200, 60), Variation::II, 4);
  const auto b = generate_dataset(BlmTask::agreement, lexicon(), small_counts(200, 60), Variation::II, 4);
  CHECK(a.of(Split::train).size() == 160);
  CHECK(a.of(Split::dev).size() == 40);
  CHECK(a.of(Split::test).size() == 60);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(a.splits[s] == b.splits[s]);
  }
  REQUIRE(a.sentences.size() == b.sentences.size());
  std::set<std::string> texts;
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    CHECK(a.sentences[i].text == b.sentences[i].text);
    CHECK(a.sentences[i].id == i);
    texts.insert(a.sentences[i].text);
  }
  CHECK(texts.size() == a.sentences.size());
  std::set<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> keys;
  for (const auto& split : a.splits) {
    for (const auto& inst : split) {
      auto sorted = inst.candidates;
      std::sort(sorted.begin(), sorted.end());
      keys.emplace(std::vector<std::uint64_t>(inst.context.begin(), inst.context.end()), sorted);
    }
  }
  CHECK(keys.size() == 260);
}

TEST_CASE("a lexicon that cannot supply enough instances is a data error") {
  grammar::Lexicon tiny;
  for (const auto& [name, entries] : lexicon().slots()) {
    tiny.add(name, entries.front());
  }
  SentencePool pool;
  CHECK(generate_blm(BlmTemplate::of(BlmTask::agreement), tiny, 1, Variation::I, 1, pool).size() == 1);
  SentencePool again;
  CHECK_THROWS_AS(generate_blm(BlmTemplate::of(BlmTask::agreement), tiny, 2, Variation::I, 1, again), DataError);
}

TEST_CASE("type I: one head noun across all context rows, WNA reuses row 1") {
  const auto ds = generate_dataset(BlmTask::agreement, lexicon(), small_counts(50, 20), Variation::I, 2);
  const auto by_id = index_sentences(ds.sentences);
  const Recognizer rec(BlmTask::agreement, lexicon());
  for (const auto& split : ds.splits) {
    for (const auto& inst : split) {
      std::set<std::size_t> nouns;
      for (const auto id : inst.context) {
        const auto r = rec.parse(by_id.at(id)->text);
        REQUIRE(r.has_value());
        for (const auto& item : r->items) {
          if (item.slot == "noun") {
            nouns.insert(item.index);
          }
        }
      }
      CHECK(nouns.size() == 1);
      const auto wna = std::find(inst.tags.begin(), inst.tags.end(), "WNA") - inst.tags.begin();
      CHECK(inst.candidates[static_cast<std::size_t>(wna)] == inst.context[0]);
    }
  }
}

TEST_CASE("recognizer inverts realization") {
  const auto slots = lexical_slots(BlmTask::alt_atl, lexicon());
  LexicalChoice choice(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    choice[i] = slots[i].size - 1;
  }
  const Recognizer rec(BlmTask::alt_atl, lexicon());
  for (const auto& ans : BlmTemplate::of(BlmTask::alt_atl).answers) {
    const auto text = realize(BlmTask::alt_atl, ans.labels, choice, lexicon());
    const auto r = rec.parse(text);
    REQUIRE(r.has_value());
    CHECK(r->labels == ans.labels);
  }
  CHECK_FALSE(rec.parse("colorless green ideas").has_value());
  CHECK_THROWS_AS(realize(BlmTask::alt_atl, {"np-bogus"}, choice, lexicon()), ConfigError);
}

TEST_CASE("validation rejects a context row that breaks the template") {
  const auto ds = generate_dataset(BlmTask::agreement, lexicon(), small_counts(20, 5), Variation::III, 3);
  const auto by_id = index_sentences(ds.sentences);
  const Recognizer rec(BlmTask::agreement, lexicon());
  auto inst = ds.of(Split::train).front();
  validate_instance(inst, BlmTask::agreement, by_id, rec);
  std::swap(inst.context[0], inst.context[1]);
  CHECK_THROWS_AS(validate_instance(inst, BlmTask::agreement, by_id, rec), DataError);
  auto tags = ds.of(Split::train).front();
  tags.correct_index = (tags.correct_index + 1) % tags.candidates.size();
  CHECK_THROWS_AS(validate_instance(tags, BlmTask::agreement, by_id, rec), DataError);
  CHECK_THROWS_AS(validate_instance(ds.of(Split::train).front(), BlmTask::alt_atl, by_id, rec), DataError);
}

TEST_CASE("BLM files: round-trip, 10-instance file, 7-candidate agreement row") {
  const auto ds = generate_dataset(BlmTask::agreement, lexicon(), small_counts(10, 2), Variation::I, 5);
  const auto& train = ds.of(Split::train);
  std::vector<BlmInstance> ten(train.begin(), train.end());
  ten.push_back(ds.of(Split::dev).front());
  ten.push_back(ds.of(Split::dev).back());
  ten.resize(10);
  std::stringstream s;
  write_blm(s, BlmTask::agreement, ten);
  const auto text = s.str();
  const auto back = load_blm(s);
  REQUIRE(back.task.has_value());
  CHECK(*back.task == BlmTask::agreement);
  REQUIRE(back.instances.size() == 10);
  CHECK(back.instances == ten);

  // Drop one candidate (id and tag) from the third instance line.
  auto broken = ten;
  broken[2].candidates.pop_back();
  broken[2].tags.pop_back();
  std::stringstream bad;
  write_blm(bad, BlmTask::agreement, broken);
  try {
    load_blm(bad);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.position() == 4);  // header, then instance lines 2, 3, 4
  }
  std::stringstream headerless;
  write_blm(headerless, std::nullopt, ten);
  const auto inferred = load_blm(headerless);
  CHECK_FALSE(inferred.task.has_value());
  CHECK(inferred.instances.size() == 10);
  std::istringstream wrong_task(text);
  CHECK_THROWS_AS(load_blm(wrong_task, BlmTask::alt_atl), FormatError);
  std::istringstream garbage("#task=agreement\n1\t2\tthree\n");
  CHECK_THROWS_AS(load_blm(garbage), FormatError);
}

TEST_CASE("BLM sentence files round-trip") {
  const auto ds = generate_dataset(BlmTask::alt_atl, lexicon(), small_counts(10, 5), Variation::II, 6);
  std::stringstream s;
  write_blm_sentences(s, ds.sentences);
  const auto back = read_blm_sentences(s);
  REQUIRE(back.size() == ds.sentences.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == ds.sentences[i].id);
    CHECK(back[i].text == ds.sentences[i].text);
    CHECK(back[i].labels == ds.sentences[i].labels);
    CHECK(back[i].split == ds.sentences[i].split);
  }
}

TEST_CASE("variation III uses more distinct lexical items than variation I") {
  const auto one = generate_dataset(BlmTask::agreement, lexicon(), small_counts(100, 0), Variation::I, 7);
  const auto three = generate_dataset(BlmTask::agreement, lexicon(), small_counts(100, 0), Variation::III, 7);
  const Recognizer rec(BlmTask::agreement, lexicon());
  auto mean_items = [&](const BlmDataset& ds) {
    const auto by_id = index_sentences(ds.sentences);
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& split : ds.splits) {
      for (const auto& inst : split) {
        total += static_cast<double>(distinct_items(inst, by_id, rec));
        ++n;
      }
    }
    REQUIRE(n == 100);
    return total / static_cast<double>(n);
  };
  const double m1 = mean_items(one), m3 = mean_items(three);
  CAPTURE(m1);
  CAPTURE(m3);
  CHECK(m3 > m1 + 1.0);
}

TEST_CASE("two-level forward shapes and checkpoint round-trip") {
  auto f = testing::make_blm_fixture(BlmTask::agreement, Variation::I, small_counts(10, 4));
  encdec::EmbeddingTensors et(f.index);
  for (const bool recurrent : {false, true}) {
    TwoLevelConfig cfg;
    cfg.recurrent = recurrent;
    TwoLevelModel m(cfg, 3);
    std::vector<ad::Tensor> ctx;
    for (const auto id : f.data.of(Split::train).front().context) {
      ctx.push_back(et.at(id));
    }
    const auto fwd = m.forward(ctx, encdec::Phase::eval, nullptr);
    CHECK(fwd.rows.size() == 7);
    CHECK(fwd.mu.size() == 5);
    CHECK(fwd.output.shape() == ad::Shape{1, 32, 24});
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(fwd.z[k] == fwd.mu[k]);
    }
    std::stringstream s;
    ad::write_checkpoint(s, m.to_blocks());
    const auto back = TwoLevelModel::from_blocks(ad::read_checkpoint(s));
    CHECK(back.snapshot() == m.snapshot());
    CHECK(back.config().recurrent == recurrent);
  }
  TwoLevelConfig lc;
  lc.latent_comparison = true;
  TwoLevelModel latent(lc, 4);
  CHECK(latent.candidate_repr(et.at(0)).size() == 5);
  encdec::ModelConfig other;
  other.latent = 4;
  CHECK_THROWS_AS(TwoLevelModel(TwoLevelConfig{}, encdec::MaskedEncoderModel(other, 1), 1), ParameterError);
}

TEST_CASE("frozen BLM decoder on the correct answer with all mu = logvar = 0 gives loss 0") {
  std::vector<embed::EmbeddingMatrix> rows;
  std::vector<std::uint64_t> ids;
  BlmInstance inst;
  for (std::size_t i = 0; i < kContextRows; ++i) {
    rows.push_back(embed::EmbeddingMatrix::from_flat(std::vector<float>(embed::kDim, 0.1f * static_cast<float>(i + 1))));
    ids.push_back(i);
    inst.context[i] = i;
  }
  for (std::size_t c = 0; c < 8; ++c) {
    std::vector<float> flat(embed::kDim, 1.0f);
    if (c != 0) {
      // Zero-sum +-1 patterns are orthogonal to the all-ones answer.
      for (std::size_t j = 0; j < embed::kDim; ++j) {
        flat[j] = ((j + c) % 2 == 0) ? 1.0f : -1.0f;
      }
    }
    rows.push_back(embed::EmbeddingMatrix::from_flat(flat));
    ids.push_back(100 + c);
    inst.candidates.push_back(100 + c);
    inst.tags.push_back(answer_tags(BlmTask::agreement)[c]);
  }
  inst.correct_index = 0;
  embed::EmbeddingIndex index(rows, ids);
  encdec::EmbeddingTensors et(index);
  TwoLevelModel m(TwoLevelConfig{}, 5);
  set_all(m.sentence().params().head_w, 0.0);
  set_all(m.sentence().params().head_b, 0.0);
  set_all(m.params().enc_w, 0.0);
  set_all(m.params().enc_b, 0.0);
  set_all(m.params().decoder.dense_w, 0.0);
  set_all(m.params().decoder.dense_b, 0.0);
  set_all(m.params().decoder.deconv_b, 1.0);
  const auto loss = blm_instance_loss(m, inst, et, encdec::Phase::eval, nullptr);
  CHECK(loss.margin == 0.0);
  CHECK(loss.kl == 0.0);
  CHECK(loss.total.item() == 0.0);
  const auto ev = evaluate_blm(m, std::span(&inst, 1), et);
  CHECK(ev.accuracy == 1.0);
  CHECK(ev.macro_f1 == 1.0);
}

TEST_CASE("micro-batch loss matches a recomputation from the closed forms") {
  auto f = testing::make_blm_fixture(BlmTask::agreement, Variation::III, small_counts(10, 4));
  encdec::EmbeddingTensors et(f.index);
  TwoLevelModel m(TwoLevelConfig{}, 6);
  const auto batch = std::span(f.data.of(Split::train)).first(4);
  double total = 0.0;
  for (const auto& inst : batch) {
    std::vector<ad::Tensor> ctx;
    for (const auto id : inst.context) {
      ctx.push_back(et.at(id));
    }
    const auto fwd = m.forward(ctx, encdec::Phase::eval, nullptr);
    double correct = 0.0, errors = 0.0;
    for (std::size_t c = 0; c < inst.candidates.size(); ++c) {
      const double s = cosine(fwd.output.value(), et.at(inst.candidates[c]).value());
      (c == inst.correct_index ? correct : errors) += s;
    }
    errors /= static_cast<double>(inst.candidates.size() - 1);
    double kl = kl_closed_form(fwd.mu.value(), fwd.logvar.value());
    for (const auto& row : fwd.rows) {
      kl += kl_closed_form(row.mu.value(), row.logvar.value());
    }
    const double expected = std::max(0.0, 1.0 - correct + errors) + kl;
    const auto loss = blm_instance_loss(m, inst, et, encdec::Phase::eval, nullptr);
    CHECK(std::abs(loss.total.item() - expected) <= 1e-12);
    total += expected;
  }
  CHECK(std::abs(blm_mean_loss(m, batch, et) - total / 4.0) <= 1e-12);
}

TEST_CASE("one epoch on 10 instances gives a finite loss") {
  auto f = testing::make_blm_fixture(BlmTask::alt_atl, Variation::I, small_counts(13, 4));
  encdec::EmbeddingTensors et(f.index);
  TwoLevelModel m(TwoLevelConfig{}, 7);
  encdec::TrainConfig cfg;
  cfg.epochs = 1;
  const auto train_set = std::span(f.data.of(Split::train)).first(10);
  const auto r = train_two_level(m, train_set, f.data.of(Split::dev), et, cfg);
  REQUIRE(r.curve.size() == 1);
  CHECK(std::isfinite(r.curve[0].train_loss));
  CHECK(std::isfinite(r.curve[0].dev_loss));
  const auto ev = evaluate_blm(m, f.data.of(Split::test), et);
  CHECK(ev.count == 4);
  std::size_t chosen = 0;
  for (const auto& [tag, n] : ev.selected) {
    chosen += n;
  }
  CHECK(chosen == 4);
}

TEST_CASE("untrained two-level models choose at chance: 1/8 agreement, 1/9 alternation") {
  // Each untrained model favours particular tags; chance emerges over many seeds.
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 100; s < 124; ++s) {
    seeds.push_back(s);
  }
  const std::pair<BlmTask, double> cases[] = {{BlmTask::agreement, 1.0 / 8.0}, {BlmTask::alt_atl, 1.0 / 9.0}};
  for (const auto& [task, chance] : cases) {
    auto f = testing::make_blm_fixture(task, Variation::III, small_counts(10, 200));
    encdec::EmbeddingTensors et(f.index);
    const auto acc = chance_accuracies(TwoLevelConfig{}, f.data.of(Split::test), et, seeds);
    double mean = 0.0;
    for (const double a : acc) {
      mean += a / static_cast<double>(acc.size());
    }
    CAPTURE(to_string(task));
    CAPTURE(mean);
    CHECK(std::abs(mean - chance) <= 0.05);
  }
}

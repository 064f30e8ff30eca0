// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "chunkloc/ad/ops.hpp"
#include "chunkloc/blm/model.hpp"
#include "chunkloc/encdec/latent.hpp"
#include "chunkloc/encdec/training.hpp"
#include "chunkloc/localize/ks.hpp"
#include "chunkloc/localize/localizer.hpp"
#include "chunkloc/util/diagnostics.hpp"
#include "fixtures.hpp"
#include "gradient_suite.hpp"
#include "grammar_oracle.hpp"

using namespace chunkloc;
using grammar::Split;

namespace {

// Tolerances and thresholds.
constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradInstances = 20;
constexpr double kGradSeconds = 60.0;
constexpr double kNumeric = 1e-9;
constexpr double kAnalytic = 1e-12;
constexpr double kTaskF1 = 0.95;
constexpr double kDenseGap = 0.03;
constexpr double kProbeF1 = 0.95;
constexpr std::size_t kTopNodes = 20;
constexpr double kTopInBand = 0.8;
constexpr double kBlmTypeI = 0.9;
constexpr double kBlmTypeIIIMargin = 0.3;
constexpr double kChanceTolerance = 0.05;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) {
    s += x;
  }
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (const double x : v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.4f", s.empty() ? "" : ",", x);
    s += buf;
  }
  return s;
}

bool g_all_pass = true;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  g_all_pass = g_all_pass && pass;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ad::Tensor constant_of(std::vector<double> v) {
  const std::size_t n = v.size();
  return ad::Tensor::constant({n}, std::move(v));
}

void gradients() {
  const auto t0 = Clock::now();
  const auto results = testing::run_gradient_suite(kGradInstances, 1);
  const double seconds = seconds_since(t0);
  double worst = 0.0;
  std::string worst_op;
  bool ok = seconds < kGradSeconds;
  for (const auto& r : results) {
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_op = r.op;
    }
    ok = ok && r.max_rel_error <= kGradTolerance;
    const bool model_case = r.op.find("loss") != std::string::npos;
    ok = ok && (model_case || r.instances >= kGradInstances);
  }
  report(1, "gradient correctness", ok,
         fmt("%zu ops, max rel err %.2e (%s) <= %.0e, %.1fs < %.0fs", results.size(), worst, worst_op.c_str(),
             kGradTolerance, seconds, kGradSeconds));
}

void closed_forms() {
  std::vector<std::string> failed;
  auto expect = [&](const char* what, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) {
      failed.push_back(fmt("%s got %.17g want %.17g", what, got, want));
    }
  };
  using ad::Tensor;
  expect("kl zero", ad::kl_standard_normal(Tensor::zeros({5}), Tensor::zeros({5})).item(), 0.0, kAnalytic);
  expect("kl mu", ad::kl_standard_normal(constant_of({1, 0, 0, 0, 0}), Tensor::zeros({5})).item(), 0.5, kAnalytic);
  expect("kl logvar", ad::kl_standard_normal(Tensor::zeros({5}), constant_of({1, 0, 0, 0, 0})).item(),
         (std::numbers::e - 2.0) / 2.0, kAnalytic);

  auto s = [](double v) { return Tensor::scalar(v); };
  const std::vector<Tensor> zeros{s(0), s(0), s(0)};
  expect("margin separated", ad::max_margin(s(1.0), zeros).item(), 0.0, kAnalytic);
  const std::vector<Tensor> equal{s(0.4), s(0.4)};
  expect("margin tied", ad::max_margin(s(0.4), equal).item(), 1.0, kAnalytic);
  const std::vector<Tensor> six(6, s(0.3));
  expect("margin six", ad::max_margin(s(0.5), six).item(), 0.8, kAnalytic);

  const std::vector<double> uniform_logits(5, 0.7);
  for (const double f : ad::mask_factors(uniform_logits, 1, 5, 0.3, ad::MaskMode::soft)) {
    expect("mask uniform", f, 0.2, kAnalytic);
  }
  const std::vector<double> peak{2, 0, 0, 0, 0};
  const auto p = ad::mask_factors(peak, 1, 5, 1.0, ad::MaskMode::soft);
  // numpy: exp(x) / exp(x).sum()
  expect("mask peak", p[0], 0.6487856442839393, kNumeric);
  expect("mask rest", p[1], 0.08780358892901517, kNumeric);
  const std::vector<double> many{0.3, -0.2, 0.1, 0.9, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  const auto rows = ad::mask_factors(many, 2, 5, 0.05, ad::MaskMode::soft);
  for (std::size_t r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      sum += rows[r * 5 + k];
    }
    expect("mask row sum", sum, 1.0, kAnalytic);
  }

  const std::vector<double> a{1, 2, 3}, odd{1, 3}, even{2, 4}, lo{1, 2}, hi{3, 4};
  expect("ks identical", localize::ks_statistic(a, a), 0.0, kAnalytic);
  expect("ks disjoint", localize::ks_statistic(lo, hi), 1.0, kAnalytic);
  expect("ks interleaved", localize::ks_statistic(odd, even), 0.5, kAnalytic);
  // mpmath: 2 * nsum((-1)^(j-1) exp(-2 j^2 l^2))
  expect("kolmogorov 1.0", localize::kolmogorov_survival(1.0), 0.2699996716773545, kNumeric);
  // scipy.stats.ks_2samp(method="exact") on n=10, m=8, D=0.9
  expect("ks exact", localize::ks_exact_p_value(10, 8, 0.9), 0.0004113533525298232, kNumeric);

  expect("cosine self", ad::cosine_similarity(constant_of({1, -2, 0.5, 3}), constant_of({1, -2, 0.5, 3})).item(), 1.0,
         kAnalytic);
  expect("cosine 4/5", ad::cosine_similarity(constant_of({1, 2}), constant_of({2, 1})).item(), 0.8, kAnalytic);
  expect("cosine orthogonal", ad::cosine_similarity(constant_of({1, 0, 0}), constant_of({0, 1, 0})).item(), 0.0,
         kAnalytic);
  const std::vector<double> h1{3, 4, 0}, h2{4, 3, 0};
  expect("pair score", localize::pair_score(h1, h2).score, 1.0 - 24.0 / 25.0, kAnalytic);

  report(2, "closed forms", failed.empty(),
         failed.empty() ? fmt("KL, margin, mask, KS, cosine within %.0e / %.0e", kNumeric, kAnalytic) : failed.front());
}

bool is_partition(const encdec::MaskedEncoderModel& model) {
  const std::size_t n = model.nodes(), k = model.config().latent;
  const auto f = ad::mask_factors(model.params().mask_logits.value(), n, k, model.tau(), ad::MaskMode::hard);
  std::vector<std::set<std::size_t>> sets(k);
  for (std::size_t node = 0; node < n; ++node) {
    std::size_t ones = 0;
    for (std::size_t u = 0; u < k; ++u) {
      if (f[node * k + u] == 1.0) {
        sets[u].insert(node);
        ++ones;
      } else if (f[node * k + u] != 0.0) {
        return false;
      }
    }
    if (ones != 1) {
      return false;
    }
  }
  std::set<std::size_t> all;
  std::size_t total = 0;
  for (const auto& s : sets) {
    all.insert(s.begin(), s.end());
    total += s.size();
  }
  return n == 240 && all.size() == n && total == n;
}

// Perturbs every input cell outside the regions feeding unit k and counts
// units whose mu or logvar moved.
std::size_t isolation_violations(const encdec::MaskedEncoderModel& model, const embed::EmbeddingMatrix& input,
                                 Rng& rng, std::size_t& tested) {
  const auto& conv = model.config().conv;
  const auto regions = encdec::conv_regions(conv);
  const auto assignment = model.hardened_assignment();
  const auto base = model.encode(input, encdec::Phase::eval, nullptr);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < model.config().latent; ++k) {
    std::vector<bool> feeds(regions.size(), false);
    for (std::size_t node = 0; node < assignment.size(); ++node) {
      if (assignment[node] == k) {
        feeds[encdec::locate_node(conv, node).window] = true;
      }
    }
    auto perturbed = input;
    std::size_t cells = 0;
    for (std::size_t r = 0; r < conv.input_h; ++r) {
      for (std::size_t c = 0; c < conv.input_w; ++c) {
        const bool inside = std::any_of(regions.begin(), regions.end(),
                                        [&](const auto& reg) { return feeds[reg.index] && reg.contains(r, c); });
        if (!inside) {
          perturbed.at(r, c) += static_cast<float>(5.0 * rng.normal());
          ++cells;
        }
      }
    }
    if (cells == 0) {
      continue;
    }
    ++tested;
    const auto enc = model.encode(perturbed, encdec::Phase::eval, nullptr);
    violations += enc.mu.value()[k] != base.mu.value()[k] || enc.logvar.value()[k] != base.logvar.value()[k];
  }
  return violations;
}

void sparsity_structure(const std::vector<encdec::MaskedEncoderModel>& trained, const testing::SentenceFixture& f) {
  bool partition = true;
  for (const auto& m : trained) {
    partition = partition && is_partition(m);
  }
  // Constructed mask: window w feeds unit w mod 5, so every unit has cells
  // outside its regions.
  encdec::MaskedEncoderModel windowed(encdec::ModelConfig{}, 7);
  auto logits = windowed.params().mask_logits.mutable_value();
  for (std::size_t node = 0; node < windowed.nodes(); ++node) {
    const auto unit = encdec::locate_node(windowed.config().conv, node).window % 5;
    for (std::size_t u = 0; u < 5; ++u) {
      logits[node * 5 + u] = u == unit ? 3.0 : -3.0;
    }
  }
  partition = partition && is_partition(windowed);
  Rng rng(99);
  std::size_t tested = 0, violations = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& input = f.index.at(f.set.records[i * 101].id);
    violations += isolation_violations(windowed, input, rng, tested);
    for (const auto& m : trained) {
      violations += isolation_violations(m, input, rng, tested);
    }
  }
  report(3, "sparsification structure", partition && violations == 0 && tested >= 100,
         fmt("partition of 240 nodes in %zu models; %zu isolation checks, %zu bit changes", trained.size() + 1, tested,
             violations));
}

void dataset_constants(const testing::SentenceFixture& f) {
  const auto& patterns = grammar::enumerate_patterns();
  bool ok = patterns.size() == 14 && testing::brute_force_patterns().size() == 14;
  ok = ok && f.set.of(Split::train).size() == 2576 && f.set.of(Split::dev).size() == 630 &&
       f.set.of(Split::test).size() == 798;
  const auto lookup = encdec::pattern_lookup(f.set.records);
  std::map<std::size_t, std::size_t> per_pattern;
  for (const auto& split : f.set.splits) {
    for (const auto& inst : split) {
      ++per_pattern[lookup.at(inst.input_id)];
    }
  }
  ok = ok && per_pattern.size() == 14;
  for (const auto& [p, n] : per_pattern) {
    ok = ok && n == 286;
  }
  const auto gn = grammar::minimal_pairs(grammar::PairKind::gram_number).size();
  const auto sv = grammar::minimal_pairs(grammar::PairKind::subj_verb).size();
  bool oracle = true;
  for (const auto kind : grammar::kAllPairKinds) {
    oracle = oracle && testing::implemented_pairs(kind) == testing::brute_force_pairs(kind);
  }
  ok = ok && gn == 10 && sv == 7 && oracle;
  report(4, "dataset constants", ok,
         fmt("14 patterns, %zu:%zu:%zu, 286 per pattern, gram_number=%zu subj_verb=%zu, oracle %s",
             f.set.of(Split::train).size(), f.set.of(Split::dev).size(), f.set.of(Split::test).size(), gn, sv,
             oracle ? "match" : "mismatch"));
}

struct SentenceRun {
  encdec::MaskedEncoderModel model;
  double f1 = 0.0;
  double probe_f1 = 0.0;
};

SentenceRun train_sentence(const testing::SentenceFixture& f, bool sparsify, std::uint64_t seed) {
  encdec::ModelConfig mc;
  mc.sparsify = sparsify;
  SentenceRun run{encdec::MaskedEncoderModel(mc, seed)};
  encdec::EmbeddingTensors et(f.index);
  encdec::TrainConfig tc;
  tc.seed = seed;
  encdec::train(run.model, f.set.of(Split::train), f.set.of(Split::dev), et, tc);
  run.f1 = encdec::evaluate(run.model, f.set.of(Split::test), et, encdec::pattern_lookup(f.set.records)).macro_f1;
  const auto train_rows = testing::records_in(f.set.records, Split::train);
  const auto test_rows = testing::records_in(f.set.records, Split::test);
  run.probe_f1 = encdec::latent_probe(encdec::compute_latents(run.model, train_rows, f.index),
                                      encdec::compute_latents(run.model, test_rows, f.index))
                     .macro_f1;
  return run;
}

// Regions 2-5 span rows 15-31 and hold the planted chunk-number blocks
// (rows 25-31); regions 0-1 span rows 0-14 and carry no signal.
bool in_signal_band(std::size_t window) { return window >= 2; }

void localization(const std::vector<encdec::MaskedEncoderModel>& models, const testing::SentenceFixture& f) {
  const auto test_rows = testing::records_in(f.set.records, Split::test);
  const grammar::PairKind kinds[] = {grammar::PairKind::gram_number};
  bool ok = true;
  std::vector<double> top_fraction, free_removed, band_removed;
  for (const auto& model : models) {
    const auto values = localize::collect_values(model, test_rows, f.index);
    const localize::FilterConfig cfg;
    const auto filter = localize::filter_nodes(values, cfg);
    const auto rep = localize::build_report(model, values, filter, kinds, cfg);
    const auto ranked = localize::ranked_nodes(rep, grammar::PairKind::gram_number);
    std::size_t in_band = 0;
    const std::size_t top = std::min(kTopNodes, ranked.size());
    for (std::size_t i = 0; i < top; ++i) {
      in_band += in_signal_band(encdec::locate_node(model.config().conv, ranked[i].first).window);
    }
    std::size_t free_total = 0, free_rm = 0, band_total = 0, band_rm = 0;
    for (const auto& d : filter.decisions) {
      const bool band = in_signal_band(encdec::locate_node(model.config().conv, d.node).window);
      (band ? band_total : free_total) += 1;
      (band ? band_rm : free_rm) += d.removed;
    }
    const double frac = top == kTopNodes ? static_cast<double>(in_band) / static_cast<double>(kTopNodes) : 0.0;
    const double fr = static_cast<double>(free_rm) / static_cast<double>(free_total);
    const double br = static_cast<double>(band_rm) / static_cast<double>(band_total);
    top_fraction.push_back(frac);
    free_removed.push_back(fr);
    band_removed.push_back(br);
    ok = ok && frac >= kTopInBand && fr > br;
  }
  report(7, "localization oracle", ok,
         fmt("top-%zu in band per seed [%s] >= %.2f; removed signal-free [%s] > band [%s]", kTopNodes,
             list(top_fraction).c_str(), kTopInBand, list(free_removed).c_str(), list(band_removed).c_str()));
}

double train_blm(blm::Variation variation, std::uint64_t seed) {
  const auto counts = blm::BlmCounts::table_defaults(blm::BlmTask::agreement, variation);
  const auto f = testing::make_blm_fixture(blm::BlmTask::agreement, variation, counts);
  encdec::EmbeddingTensors et(f.index);
  blm::TwoLevelModel model(blm::TwoLevelConfig{}, seed);
  encdec::TrainConfig tc;
  tc.seed = seed;
  blm::train_two_level(model, f.data.of(Split::train), f.data.of(Split::dev), et, tc);
  return blm::evaluate_blm(model, f.data.of(Split::test), et).accuracy;
}

double chance_mean(blm::BlmTask task) {
  blm::BlmCounts counts;
  counts.train = 10;
  counts.test = 200;
  const auto f = testing::make_blm_fixture(task, blm::Variation::III, counts);
  encdec::EmbeddingTensors et(f.index);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 100; s < 124; ++s) {
    seeds.push_back(s);
  }
  return mean(blm::chance_accuracies(blm::TwoLevelConfig{}, f.data.of(Split::test), et, seeds));
}

void blm_synthetic() {
  std::vector<double> type1, type3;
  for (const auto seed : kSeeds) {
    type1.push_back(train_blm(blm::Variation::I, seed));
    type3.push_back(train_blm(blm::Variation::III, seed));
  }
  const double chance8 = chance_mean(blm::BlmTask::agreement);
  const double chance9 = chance_mean(blm::BlmTask::alt_atl);
  const bool ok = mean(type1) >= kBlmTypeI && mean(type3) >= 1.0 / 8.0 + kBlmTypeIIIMargin &&
                  std::abs(chance8 - 1.0 / 8.0) <= kChanceTolerance &&
                  std::abs(chance9 - 1.0 / 9.0) <= kChanceTolerance;
  report(8, "BLM synthetic", ok,
         fmt("type I [%s] mean %.4f >= %.2f; type III [%s] mean %.4f >= %.4f; chance %.4f ~ 1/8, %.4f ~ 1/9 (+-%.2f)",
             list(type1).c_str(), mean(type1), kBlmTypeI, list(type3).c_str(), mean(type3),
             1.0 / 8.0 + kBlmTypeIIIMargin, chance8, chance9, kChanceTolerance));
}

}  // namespace

int main() {
  set_warning_sink([](std::string_view) {});
  const auto t0 = Clock::now();
  gradients();
  closed_forms();

  const auto fixture = testing::make_sentence_fixture();
  std::vector<encdec::MaskedEncoderModel> sparse_models;
  std::vector<double> sparse_f1, dense_f1, probe_f1;
  for (const auto seed : kSeeds) {
    auto sparse = train_sentence(fixture, true, seed);
    sparse_f1.push_back(sparse.f1);
    probe_f1.push_back(sparse.probe_f1);
    sparse_models.push_back(std::move(sparse.model));
    dense_f1.push_back(train_sentence(fixture, false, seed).f1);
  }

  sparsity_structure(sparse_models, fixture);
  dataset_constants(fixture);
  const double gap = mean(dense_f1) - mean(sparse_f1);
  report(5, "task performance", mean(sparse_f1) >= kTaskF1 && gap <= kDenseGap,
         fmt("sparse macro-F1 [%s] mean %.4f >= %.2f; dense [%s] mean %.4f, gap %.4f <= %.2f", list(sparse_f1).c_str(),
             mean(sparse_f1), kTaskF1, list(dense_f1).c_str(), mean(dense_f1), gap, kDenseGap));
  report(6, "latent probe", mean(probe_f1) >= kProbeF1,
         fmt("nearest-centroid macro-F1 [%s] mean %.4f >= %.2f", list(probe_f1).c_str(), mean(probe_f1), kProbeF1));
  localization(sparse_models, fixture);
  blm_synthetic();
  std::printf("%s in %.0fs\n", g_all_pass ? "ALL PASS" : "SOME FAIL", seconds_since(t0));
  return g_all_pass ? 0 : 1;
}

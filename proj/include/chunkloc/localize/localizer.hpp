#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/encdec/model.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "chunkloc/grammar/pattern.hpp"
#include "chunkloc/localize/ks.hpp"

namespace chunkloc::localize {

// Activation values of every CNN output node, grouped by pattern index.
class NodeValues {
 public:
  NodeValues(std::size_t nodes, std::size_t patterns)
      : nodes_(nodes), patterns_(patterns), values_(nodes * patterns) {}

  std::size_t nodes() const { return nodes_; }
  std::size_t patterns() const { return patterns_; }
  std::vector<double>& at(std::size_t node, std::size_t pattern) {
    return values_[node * patterns_ + pattern];
  }
  const std::vector<double>& at(std::size_t node, std::size_t pattern) const {
    return values_[node * patterns_ + pattern];
  }
  std::size_t count(std::size_t node) const;

 private:
  std::size_t nodes_;
  std::size_t patterns_;
  std::vector<std::vector<double>> values_;
};

// Eval-phase CNN outputs of each record, indexed by its pattern.
NodeValues collect_values(const encdec::MaskedEncoderModel& model,
                          std::span<const grammar::SentenceRecord> records,
                          const embed::EmbeddingIndex& embeddings);

enum class FilterMode : std::uint8_t {
  pairwise,  // remove iff no pattern pair rejects at alpha
  omnibus,   // remove iff no pattern-vs-rest test rejects at alpha / #patterns
};
std::string_view to_string(FilterMode mode);
FilterMode parse_filter_mode(std::string_view text);

struct FilterConfig {
  double alpha = 0.05;
  FilterMode mode = FilterMode::pairwise;
  KsMethod method = KsMethod::asymptotic;
};

struct NodeDecision {
  std::size_t node = 0;
  bool removed = false;
  double min_p_value = 1.0;  // over the tests the mode runs
};

struct FilterResult {
  std::vector<NodeDecision> decisions;  // one per node, by node id
  std::vector<std::size_t> kept() const;
  std::size_t removed_count() const;
};

// Throws ParameterError unless 0 < alpha < 1.
FilterResult filter_nodes(const NodeValues& values, const FilterConfig& config);

struct Histogram {
  std::vector<double> counts;
  bool degenerate = false;  // lo == hi: all mass in bin 0
};

// Uniform bins over [lo, hi]; bins are left-closed and the last bin also
// holds hi. Throws ParameterError on bins == 0, lo > hi or values outside.
Histogram bin_histogram(std::span<const double> values, double lo, double hi, std::size_t bins = 100);

struct PairScore {
  double score = 0.0;
  bool zero_histogram = false;  // an all-zero histogram scores 1
};

// 1 - cos(h1, h2). Throws ShapeError on length mismatch.
PairScore pair_score(std::span<const double> h1, std::span<const double> h2);

struct ScoreRow {
  std::size_t node = 0;
  std::size_t channel = 0;
  std::size_t region = 0;
  std::size_t region_row = 0;
  std::size_t region_col = 0;
  std::size_t latent_unit = 0;
  grammar::PairKind kind = grammar::PairKind::gram_number;
  std::string pattern1;
  std::string pattern2;
  double score = 0.0;
};

struct AggregateRow {
  grammar::PairKind kind = grammar::PairKind::gram_number;
  std::size_t node = 0;
  encdec::Region region{};
  std::size_t channel = 0;
  std::size_t latent_unit = 0;
  double mean_score = 0.0;
  std::size_t pairs = 0;
};

struct RegionSummary {
  grammar::PairKind kind = grammar::PairKind::gram_number;
  encdec::Region region{};
  std::size_t nodes = 0;
  std::size_t kept = 0;
  double mean_score = 0.0;  // over kept nodes and pairs; 0 when none kept
};

struct Report {
  FilterConfig config;
  std::size_t bins = 100;
  FilterResult filter;
  std::vector<ScoreRow> rows;  // kept nodes x pairs of each requested kind
  std::vector<AggregateRow> aggregate;
  std::vector<RegionSummary> regions;
  std::size_t degenerate_histograms = 0;
  std::size_t zero_histograms = 0;
};

Report build_report(const encdec::MaskedEncoderModel& model, const NodeValues& values,
                    const FilterResult& filter, std::span<const grammar::PairKind> kinds,
                    const FilterConfig& config, std::size_t bins = 100);

// Mean score per kept node over the pairs of `kind`, highest first
// (ties to the lower node id).
std::vector<std::pair<std::size_t, double>> ranked_nodes(const Report& report, grammar::PairKind kind);

// node_id,channel,region_row,region_col,latent_unit,pair_kind,pattern1,pattern2,score
void write_summary_csv(std::ostream& out, const Report& report);
// node_id,removed,min_p_value
void write_filter_csv(std::ostream& out, const Report& report);
// pair_kind,region,region_row,region_col,region_rows,region_cols,channel,latent_unit,mean_score,pairs
void write_aggregate_csv(std::ostream& out, const Report& report);
// pair_kind,region,region_row,region_col,region_rows,region_cols,nodes,kept,mean_score
void write_region_csv(std::ostream& out, const Report& report);

}  // namespace chunkloc::localize

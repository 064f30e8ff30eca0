#include "chunkloc/localize/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::localize {

std::size_t NodeValues::count(std::size_t node) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < patterns_; ++p) {
    n += at(node, p).size();
  }
  return n;
}

NodeValues collect_values(const encdec::MaskedEncoderModel& model,
                          std::span<const grammar::SentenceRecord> records,
                          const embed::EmbeddingIndex& embeddings) {
  NodeValues out(model.nodes(), grammar::enumerate_patterns().size());
  for (const auto& r : records) {
    const auto cnn = model.cnn_output(encdec::MaskedEncoderModel::as_input(embeddings.at(r.id)));
    const auto p = grammar::pattern_index(r.pattern);
    for (std::size_t n = 0; n < out.nodes(); ++n) {
      out.at(n, p).push_back(cnn[n]);
    }
  }
  return out;
}

std::string_view to_string(FilterMode mode) {
  return mode == FilterMode::pairwise ? "pairwise" : "omnibus";
}

FilterMode parse_filter_mode(std::string_view text) {
  if (text == "pairwise") {
    return FilterMode::pairwise;
  }
  if (text == "omnibus") {
    return FilterMode::omnibus;
  }
  throw ConfigError("unknown filter mode '" + std::string(text) + "'");
}

std::vector<std::size_t> FilterResult::kept() const {
  std::vector<std::size_t> out;
  for (const auto& d : decisions) {
    if (!d.removed) {
      out.push_back(d.node);
    }
  }
  return out;
}

std::size_t FilterResult::removed_count() const {
  return static_cast<std::size_t>(
      std::count_if(decisions.begin(), decisions.end(), [](const NodeDecision& d) { return d.removed; }));
}

FilterResult filter_nodes(const NodeValues& values, const FilterConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw ParameterError("alpha must lie in (0, 1)");
  }
  const std::size_t np = values.patterns();
  FilterResult out;
  out.decisions.reserve(values.nodes());
  for (std::size_t n = 0; n < values.nodes(); ++n) {
    std::vector<std::vector<double>> sorted(np);
    for (std::size_t p = 0; p < np; ++p) {
      sorted[p] = values.at(n, p);
      std::sort(sorted[p].begin(), sorted[p].end());
    }
    NodeDecision d;
    d.node = n;
    bool rejected = false;
    if (config.mode == FilterMode::pairwise) {
      for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = i + 1; j < np; ++j) {
          const auto r = ks_two_sample_sorted(sorted[i], sorted[j], config.method);
          d.min_p_value = std::min(d.min_p_value, r.p_value);
          rejected = rejected || r.p_value < config.alpha;
        }
      }
    } else {
      const double level = config.alpha / static_cast<double>(np);
      for (std::size_t i = 0; i < np; ++i) {
        std::vector<double> rest;
        for (std::size_t j = 0; j < np; ++j) {
          if (j != i) {
            rest.insert(rest.end(), sorted[j].begin(), sorted[j].end());
          }
        }
        std::sort(rest.begin(), rest.end());
        const auto r = ks_two_sample_sorted(sorted[i], rest, config.method);
        d.min_p_value = std::min(d.min_p_value, r.p_value);
        rejected = rejected || r.p_value < level;
      }
    }
    d.removed = !rejected;
    out.decisions.push_back(d);
  }
  return out;
}

Histogram bin_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0) {
    throw ParameterError("histogram needs at least one bin");
  }
  if (!(lo <= hi)) {
    throw ParameterError("histogram range is empty");
  }
  Histogram h;
  h.counts.assign(bins, 0.0);
  if (lo == hi) {
    h.degenerate = true;
    for (const auto v : values) {
      if (v != lo) {
        throw ParameterError("histogram value outside the range");
      }
    }
    h.counts[0] = static_cast<double>(values.size());
    return h;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (const auto v : values) {
    if (!(v >= lo && v <= hi)) {
      throw ParameterError("histogram value outside the range");
    }
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, bins - 1)] += 1.0;
  }
  return h;
}

PairScore pair_score(std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() != h2.size()) {
    throw ShapeError("pair_score: histograms differ in length");
  }
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    dot += h1[i] * h2[i];
    n1 += h1[i] * h1[i];
    n2 += h2[i] * h2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) {
    return {1.0, true};
  }
  return {1.0 - dot / (std::sqrt(n1) * std::sqrt(n2)), false};
}

Report build_report(const encdec::MaskedEncoderModel& model, const NodeValues& values,
                    const FilterResult& filter, std::span<const grammar::PairKind> kinds,
                    const FilterConfig& config, std::size_t bins) {
  const auto& conv = model.config().conv;
  if (values.nodes() != conv.output_nodes() || filter.decisions.size() != values.nodes()) {
    throw ShapeError("node values, filter decisions and model disagree on the node count");
  }
  const auto assignment = model.hardened_assignment();
  const auto regions = encdec::conv_regions(conv);

  Report report;
  report.config = config;
  report.bins = bins;
  report.filter = filter;

  const auto kept = filter.kept();
  // Histograms of every kept node and pattern over the node's global range.
  std::map<std::size_t, std::vector<Histogram>> hists;
  for (const auto n : kept) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t p = 0; p < values.patterns(); ++p) {
      for (const auto v : values.at(n, p)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (lo > hi) {
      lo = hi = 0.0;
    }
    auto& hs = hists[n];
    for (std::size_t p = 0; p < values.patterns(); ++p) {
      hs.push_back(bin_histogram(values.at(n, p), lo, hi, bins));
      report.degenerate_histograms += hs.back().degenerate ? 1 : 0;
    }
  }

  for (const auto kind : kinds) {
    const auto pairs = grammar::minimal_pairs(kind);
    std::vector<double> region_sum(regions.size(), 0.0);
    std::vector<std::size_t> region_terms(regions.size(), 0), region_kept(regions.size(), 0);
    for (const auto n : kept) {
      const auto loc = encdec::locate_node(conv, n);
      const auto& region = regions[loc.window];
      double node_sum = 0.0;
      for (const auto& pair : pairs) {
        const auto& h1 = hists[n][grammar::pattern_index(pair.p1)];
        const auto& h2 = hists[n][grammar::pattern_index(pair.p2)];
        const auto s = pair_score(h1.counts, h2.counts);
        report.zero_histograms += s.zero_histogram ? 1 : 0;
        report.rows.push_back({n, loc.channel, region.index, region.grid_row, region.grid_col,
                               assignment[n], kind, pair.p1.str(), pair.p2.str(), s.score});
        node_sum += s.score;
      }
      const double mean = pairs.empty() ? 0.0 : node_sum / static_cast<double>(pairs.size());
      report.aggregate.push_back({kind, n, region, loc.channel, assignment[n], mean, pairs.size()});
      region_sum[region.index] += node_sum;
      region_terms[region.index] += pairs.size();
      ++region_kept[region.index];
    }
    for (const auto& region : regions) {
      RegionSummary s{kind, region, conv.out_channels, region_kept[region.index], 0.0};
      if (region_terms[region.index] > 0) {
        s.mean_score = region_sum[region.index] / static_cast<double>(region_terms[region.index]);
      }
      report.regions.push_back(s);
    }
  }
  return report;
}

std::vector<std::pair<std::size_t, double>> ranked_nodes(const Report& report, grammar::PairKind kind) {
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& a : report.aggregate) {
    if (a.kind == kind) {
      out.emplace_back(a.node, a.mean_score);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.second > y.second || (x.second == y.second && x.first < y.first);
  });
  return out;
}

void write_summary_csv(std::ostream& out, const Report& report) {
  out << "node_id,channel,region_row,region_col,latent_unit,pair_kind,pattern1,pattern2,score\n";
  for (const auto& r : report.rows) {
    out << r.node << ',' << r.channel << ',' << r.region_row << ',' << r.region_col << ','
        << r.latent_unit << ',' << to_string(r.kind) << ',' << r.pattern1 << ',' << r.pattern2 << ','
        << text::format_double(r.score) << '\n';
  }
}

void write_filter_csv(std::ostream& out, const Report& report) {
  out << "node_id,removed,min_p_value\n";
  for (const auto& d : report.filter.decisions) {
    out << d.node << ',' << (d.removed ? 1 : 0) << ',' << text::format_double(d.min_p_value) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const Report& report) {
  out << "pair_kind,region,region_row,region_col,region_rows,region_cols,channel,latent_unit,mean_score,"
         "pairs\n";
  for (const auto& a : report.aggregate) {
    out << to_string(a.kind) << ',' << a.region.index << ',' << a.region.grid_row << ','
        << a.region.grid_col << ',' << a.region.rows << ',' << a.region.cols << ',' << a.channel << ','
        << a.latent_unit << ',' << text::format_double(a.mean_score) << ',' << a.pairs << '\n';
  }
}

void write_region_csv(std::ostream& out, const Report& report) {
  out << "pair_kind,region,region_row,region_col,region_rows,region_cols,nodes,kept,mean_score\n";
  for (const auto& s : report.regions) {
    out << to_string(s.kind) << ',' << s.region.index << ',' << s.region.grid_row << ','
        << s.region.grid_col << ',' << s.region.rows << ',' << s.region.cols << ',' << s.nodes << ','
        << s.kept << ',' << text::format_double(s.mean_score) << '\n';
  }
}

}  // namespace chunkloc::localize

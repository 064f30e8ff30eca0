#include <fstream>
#include <memory>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/localize/localizer.hpp"
#include "commands.hpp"
#include "data_io.hpp"

namespace chunkloc::cli {

namespace {

struct LocalizeOptions {
  fs::path data;
  fs::path embeddings;
  fs::path checkpoint;
  fs::path out;
  double alpha = 0.05;
  std::size_t bins = 100;
  std::string pair_kind = "all";
  std::string filter_mode = "pairwise";
  std::string ks_method = "asymptotic";
  std::string split = "test";
  bool resume = false;
};

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  return out;
}

localize::KsMethod parse_ks_method(const std::string& s) {
  if (s == "asymptotic") return localize::KsMethod::asymptotic;
  if (s == "exact") return localize::KsMethod::exact;
  throw ConfigError("unknown KS method '" + s + "'");
}

}  // namespace

Command add_localize(CLI::App& root) {
  auto o = std::make_shared<LocalizeOptions>();
  auto* cmd = root.add_subcommand("localize", "KS-filter CNN output nodes and score minimal pattern pairs");
  add_config_option(*cmd);
  cmd->add_option("--data", o->data, "directory written by generate --kind sentence")->required();
  cmd->add_option("--embeddings", o->embeddings, "EMB1 file row-aligned with sentences.tsv")->required();
  cmd->add_option("--checkpoint", o->checkpoint, "sentence-level checkpoint written by train")->required();
  cmd->add_option("--out", o->out, "output directory")->required();
  cmd->add_option("--alpha", o->alpha, "KS rejection level")->capture_default_str();
  cmd->add_option("--bins", o->bins, "histogram bins over each node's global range")->capture_default_str();
  cmd->add_option("--pair-kind", o->pair_kind, "gram_number, length, subj_verb or all")
      ->check(CLI::IsMember({"all", "gram_number", "length", "subj_verb"}))
      ->capture_default_str();
  cmd->add_option("--filter-mode", o->filter_mode,
                  "pairwise: all pattern pairs at alpha; omnibus: pattern vs rest at alpha / 14")
      ->check(CLI::IsMember({"pairwise", "omnibus"}))
      ->capture_default_str();
  cmd->add_option("--ks-method", o->ks_method, "asymptotic or exact p-values")
      ->check(CLI::IsMember({"asymptotic", "exact"}))
      ->capture_default_str();
  cmd->add_option("--split", o->split, "sentences whose activations are collected")
      ->check(CLI::IsMember({"train", "dev", "test"}))
      ->capture_default_str();
  add_resume_option(*cmd, o->resume);
  return {cmd, [o] {
            const auto files = SentenceFiles::in(o->data);
            require_file(o->embeddings, "embedding file");
            require_file(o->checkpoint, "checkpoint");
            StageSpec spec{"localize", o->out, o->resume};
            spec.config = {{"alpha", o->alpha},           {"bins", o->bins},
                           {"pair_kind", o->pair_kind},   {"filter_mode", o->filter_mode},
                           {"ks_method", o->ks_method},   {"split", o->split}};
            spec.inputs = files.all();
            spec.inputs.push_back(o->embeddings);
            spec.inputs.push_back(o->checkpoint);
            Stage stage(std::move(spec));
            return run_stage(stage, [&](Stage& s) {
              const auto data = load_sentence_data(files, o->embeddings);
              const auto blocks = ad::read_checkpoint(o->checkpoint);
              const auto model = encdec::MaskedEncoderModel::from_blocks(blocks);
              localize::FilterConfig fc;
              fc.alpha = o->alpha;
              fc.mode = localize::parse_filter_mode(o->filter_mode);
              fc.method = parse_ks_method(o->ks_method);
              std::vector<grammar::PairKind> kinds;
              if (o->pair_kind == "all") {
                kinds.assign(std::begin(grammar::kAllPairKinds), std::end(grammar::kAllPairKinds));
              } else {
                kinds.push_back(grammar::parse_pair_kind(o->pair_kind));
              }
              const auto records = data.records_of(grammar::parse_split(o->split));
              const auto values = localize::collect_values(model, records, data.index);
              const auto filter = localize::filter_nodes(values, fc);
              const auto report = localize::build_report(model, values, filter, kinds, fc, o->bins);

              auto summary = open_csv(s.output("summary.csv"));
              localize::write_summary_csv(summary, report);
              auto decisions = open_csv(s.output("filter.csv"));
              localize::write_filter_csv(decisions, report);
              auto aggregate = open_csv(s.output("aggregate.csv"));
              localize::write_aggregate_csv(aggregate, report);
              auto regions = open_csv(s.output("regions.csv"));
              localize::write_region_csv(regions, report);

              const auto& conv = model.config().conv;
              const auto geometry = encdec::conv_regions(conv);
              std::vector<std::size_t> removed(geometry.size(), 0), total(geometry.size(), 0);
              for (const auto& d : filter.decisions) {
                const auto w = encdec::locate_node(conv, d.node).window;
                ++total[w];
                removed[w] += d.removed ? 1 : 0;
              }
              Json region_rows = Json::array();
              for (const auto& g : geometry) {
                region_rows.push_back({{"region", g.index},     {"region_row", g.grid_row},
                                       {"region_col", g.grid_col}, {"rows", g.rows},
                                       {"cols", g.cols},         {"nodes", total[g.index]},
                                       {"removed", removed[g.index]}});
              }
              Json scores = Json::array();
              for (const auto& r : report.regions) {
                scores.push_back({{"pair_kind", std::string(grammar::to_string(r.kind))},
                                  {"region", r.region.index},
                                  {"kept", r.kept},
                                  {"mean_score", r.mean_score}});
              }
              Json header;
              header["stage"] = "localize";
              header["alpha"] = fc.alpha;
              header["filter_mode"] = std::string(localize::to_string(fc.mode));
              header["correction"] = fc.mode == localize::FilterMode::omnibus ? "bonferroni over patterns" : "none";
              header["ks_method"] = o->ks_method;
              header["bins"] = o->bins;
              header["split"] = o->split;
              header["sentences"] = records.size();
              header["nodes"] = filter.decisions.size();
              header["removed"] = filter.removed_count();
              header["removed_fraction"] =
                  static_cast<double>(filter.removed_count()) / static_cast<double>(filter.decisions.size());
              header["degenerate_histograms"] = report.degenerate_histograms;
              header["zero_histograms"] = report.zero_histograms;
              header["regions"] = region_rows;
              header["region_scores"] = scores;
              std::ofstream json_out(s.output("report.json"), std::ios::binary);
              json_out << header.dump(2) << '\n';
              json_out.close();
              print_json_line({{"stage", "localize"},
                               {"removed", filter.removed_count()},
                               {"nodes", filter.decisions.size()},
                               {"alpha", fc.alpha},
                               {"filter_mode", o->filter_mode}});
            });
          }};
}

}  // namespace chunkloc::cli

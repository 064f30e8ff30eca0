#include <memory>

#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "commands.hpp"

namespace chunkloc::cli {

namespace {

struct GenerateOptions {
  fs::path out;
  fs::path lexicon = default_lexicon_path();
  std::string kind = "sentence";
  std::uint64_t seed = 1;
  std::size_t instances = 4004;
  std::string task = "agreement";
  std::string variation = "I";
  std::size_t blm_train = 2000;
  std::size_t blm_test = 0;
  double dev_fraction = 0.2;
  bool resume = false;
};

void generate_sentences(Stage& stage, const GenerateOptions& o, const grammar::Lexicon& lexicon) {
  auto records = grammar::generate_sentences(lexicon, o.seed);
  const auto total = records.size();
  auto set = grammar::build_instances(std::move(records), o.instances, o.seed);
  grammar::write_sentences(stage.output("sentences.tsv"), set.records);
  Json counts;
  counts["sentences"] = total;
  for (const auto split : {grammar::Split::train, grammar::Split::dev, grammar::Split::test}) {
    const std::string name(grammar::to_string(split));
    grammar::write_instances(stage.output("instances_" + name + ".tsv"), set.of(split));
    counts[name] = set.of(split).size();
  }
  print_json_line({{"stage", "generate"}, {"kind", "sentence"}, {"counts", counts}});
}

void generate_blm(Stage& stage, const GenerateOptions& o, const grammar::Lexicon& lexicon) {
  const auto task = blm::parse_task(o.task);
  const auto variation = blm::parse_variation(o.variation);
  auto counts = blm::BlmCounts::table_defaults(task, variation);
  counts.train = o.blm_train;
  if (o.blm_test > 0) {
    counts.test = o.blm_test;
  }
  counts.dev_fraction = o.dev_fraction;
  const auto ds = blm::generate_dataset(task, lexicon, counts, variation, o.seed);
  const blm::Recognizer recognizer(task, lexicon);
  const auto index = blm::index_sentences(ds.sentences);
  for (const auto& split : ds.splits) {
    for (const auto& inst : split) {
      blm::validate_instance(inst, task, index, recognizer);
    }
  }
  blm::write_blm_sentences(stage.output("blm_sentences.tsv"), ds.sentences);
  Json out_counts;
  out_counts["sentences"] = ds.sentences.size();
  for (const auto split : {grammar::Split::train, grammar::Split::dev, grammar::Split::test}) {
    const std::string name(grammar::to_string(split));
    blm::write_blm(stage.output("blm_" + name + ".tsv"), task, ds.of(split));
    out_counts[name] = ds.of(split).size();
  }
  print_json_line({{"stage", "generate"},
                   {"kind", "blm"},
                   {"task", std::string(blm::to_string(task))},
                   {"variation", std::string(blm::to_string(variation))},
                   {"counts", out_counts}});
}

}  // namespace

Command add_generate(CLI::App& root) {
  auto o = std::make_shared<GenerateOptions>();
  auto* cmd = root.add_subcommand("generate", "generate the sentence dataset and instances, or BLM instances");
  add_config_option(*cmd);
  cmd->add_option("--out", o->out, "output directory")->required();
  cmd->add_option("--lexicon", o->lexicon, "lexicon file")->capture_default_str();
  cmd->add_option("--kind", o->kind, "sentence or blm")
      ->check(CLI::IsMember({"sentence", "blm"}))
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "generation seed")->capture_default_str();
  cmd->add_option("--instances", o->instances, "sentence-task instances (multiple of 14)")->capture_default_str();
  cmd->add_option("--task", o->task, "BLM task: agreement, alt-atl, atl-alt")->capture_default_str();
  cmd->add_option("--variation", o->variation, "BLM lexical variation: I, II, III")->capture_default_str();
  cmd->add_option("--blm-train", o->blm_train, "BLM training instances (dev taken from these)")
      ->capture_default_str();
  cmd->add_option("--blm-test", o->blm_test, "BLM test instances (0: default for task and variation)")
      ->capture_default_str();
  cmd->add_option("--dev-fraction", o->dev_fraction, "fraction of BLM training instances used as dev")
      ->capture_default_str();
  add_resume_option(*cmd, o->resume);
  return {cmd, [o] {
            require_file(o->lexicon, "lexicon");
            StageSpec spec{"generate", o->out, o->resume};
            spec.config = {{"kind", o->kind},           {"lexicon", o->lexicon.generic_string()},
                           {"instances", o->instances}, {"task", o->task},
                           {"variation", o->variation}, {"blm_train", o->blm_train},
                           {"blm_test", o->blm_test},   {"dev_fraction", o->dev_fraction}};
            spec.seeds = {{"seed", o->seed}};
            spec.inputs = {o->lexicon};
            Stage stage(std::move(spec));
            return run_stage(stage, [&](Stage& s) {
              const auto lexicon = grammar::Lexicon::load(o->lexicon);
              if (o->kind == "sentence") {
                generate_sentences(s, *o, lexicon);
              } else {
                generate_blm(s, *o, lexicon);
              }
            });
          }};
}

}  // namespace chunkloc::cli

#include <memory>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/blm/model.hpp"
#include "chunkloc/encdec/metrics.hpp"
#include "commands.hpp"
#include "data_io.hpp"

namespace chunkloc::cli {

namespace {

struct BlmOptions {
  fs::path out;
  std::string task = "agreement";
  std::string variation = "I";
  fs::path data;
  fs::path embeddings;
  fs::path lexicon = default_lexicon_path();
  std::uint64_t data_seed = 1;
  std::uint64_t embed_seed = 1;
  fs::path sentence_checkpoint;
  bool joint = false;
  std::string sparsify = "on";
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t patience = 8;
  std::optional<double> tau_start;
  std::optional<double> tau_end;
  double kl_weight = 1.0;
  bool recurrent = false;
  bool latent_comparison = false;
  std::size_t chance_seeds = 0;
  bool resume = false;
};

// Synthetic instances and embeddings built in memory from the lexicon.
BlmData synthetic_data(const BlmOptions& o, blm::BlmTask task, blm::Variation variation) {
  const auto lexicon = grammar::Lexicon::load(o.lexicon);
  auto ds = blm::generate_dataset(task, lexicon, blm::BlmCounts::table_defaults(task, variation), variation,
                                  o.data_seed);
  const auto spec = blm::blm_layout(task, o.embed_seed);
  std::vector<embed::EmbeddingMatrix> rows;
  std::vector<std::uint64_t> ids;
  for (const auto& s : ds.sentences) {
    rows.push_back(blm::synthesize_sentence(s, spec));
    ids.push_back(s.id);
  }
  BlmData d;
  d.task = task;
  d.index = embed::EmbeddingIndex(std::move(rows), ids);
  d.sentences = std::move(ds.sentences);
  d.instances = std::move(ds.splits);
  return d;
}

}  // namespace

Command add_blm(CLI::App& root) {
  auto o = std::make_shared<BlmOptions>();
  auto* cmd = root.add_subcommand("blm", "train and evaluate the two-level model on a BLM task");
  add_config_option(*cmd);
  cmd->add_option("--out", o->out, "output directory")->required();
  cmd->add_option("--task", o->task, "agreement, alt-atl or atl-alt")->capture_default_str();
  cmd->add_option("--variation", o->variation, "lexical variation I, II or III")->capture_default_str();
  cmd->add_option("--data", o->data,
                  "directory written by generate --kind blm; without it synthetic data is built in memory");
  cmd->add_option("--embeddings", o->embeddings, "EMB1 file row-aligned with blm_sentences.tsv (with --data)");
  cmd->add_option("--lexicon", o->lexicon, "lexicon for in-memory synthetic data")->capture_default_str();
  cmd->add_option("--data-seed", o->data_seed, "seed of in-memory instance generation")->capture_default_str();
  cmd->add_option("--embed-seed", o->embed_seed, "seed of in-memory synthetic embeddings")->capture_default_str();
  cmd->add_option("--sentence-checkpoint", o->sentence_checkpoint,
                  "pretrained sentence level (train output); both levels are then trained jointly");
  cmd->add_flag("--joint", o->joint, "train both levels jointly from scratch");
  cmd->add_option("--sparsify", o->sparsify, "sentence level sparsified: on or off (from scratch only)")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "initialisation, shuffling and sampling seed")->capture_default_str();
  cmd->add_option("--epochs", o->epochs, "maximum epochs")->capture_default_str();
  cmd->add_option("--batch-size", o->batch_size, "minibatch size")->capture_default_str();
  cmd->add_option("--lr", o->lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--patience", o->patience, "early-stopping patience in epochs (0: off)")->capture_default_str();
  cmd->add_option("--tau-start", o->tau_start,
                  "mask temperature at the first step (default: 1 from scratch, the checkpoint's otherwise)");
  cmd->add_option("--tau-end", o->tau_end, "mask temperature at the last step (default: 0.01 or the checkpoint's)");
  cmd->add_option("--kl-weight", o->kl_weight, "weight of the KL terms (1: unweighted objective)")
      ->capture_default_str();
  cmd->add_flag("--recurrent", o->recurrent, "compose the 7 sentence latents recurrently instead of concatenating");
  cmd->add_flag("--latent-comparison", o->latent_comparison,
                "score candidates in the sentence latent space instead of the embedding grid");
  cmd->add_option("--chance-seeds", o->chance_seeds, "untrained models whose mean test accuracy is reported")
      ->capture_default_str();
  add_resume_option(*cmd, o->resume);
  return {cmd, [o] {
            const auto task = blm::parse_task(o->task);
            const auto variation = blm::parse_variation(o->variation);
            if (o->joint == !o->sentence_checkpoint.empty()) {
              throw ConfigError("blm needs exactly one of --sentence-checkpoint (pretrained) or --joint");
            }
            std::optional<BlmFiles> files;
            StageSpec spec{"blm", o->out, o->resume};
            if (!o->data.empty()) {
              files = BlmFiles::in(o->data);
              require_file(o->embeddings, "embedding file");
              spec.inputs = files->all();
              spec.inputs.push_back(o->embeddings);
            } else {
              require_file(o->lexicon, "lexicon");
              spec.inputs = {o->lexicon};
            }
            if (!o->sentence_checkpoint.empty()) {
              require_file(o->sentence_checkpoint, "sentence checkpoint");
              spec.inputs.push_back(o->sentence_checkpoint);
            }
            spec.config = {{"task", std::string(blm::to_string(task))},
                           {"variation", std::string(blm::to_string(variation))},
                           {"regime", o->joint ? "joint" : "pretrained"},
                           {"sparsify", o->sparsify},
                           {"epochs", o->epochs},
                           {"batch_size", o->batch_size},
                           {"lr", o->lr},
                           {"patience", o->patience},
                           {"tau_start", o->tau_start ? Json(*o->tau_start) : Json()},
                           {"tau_end", o->tau_end ? Json(*o->tau_end) : Json()},
                           {"kl_weight", o->kl_weight},
                           {"recurrent", o->recurrent},
                           {"latent_comparison", o->latent_comparison},
                           {"chance_seeds", o->chance_seeds}};
            spec.seeds = {{"seed", o->seed}, {"data_seed", o->data_seed}, {"embed_seed", o->embed_seed}};
            Stage stage(std::move(spec));
            return run_stage(stage, [&](Stage& s) {
              auto data = files ? load_blm_data(*files, o->embeddings, task) : synthetic_data(*o, task, variation);
              if (data.task != task) {
                throw DataError("BLM files hold task " + std::string(blm::to_string(data.task)));
              }
              for (const auto& split : data.instances) {
                for (const auto& inst : split) {
                  if (inst.variation != variation) {
                    throw DataError("BLM files hold variation " + std::string(blm::to_string(inst.variation)) +
                                    " instances, expected " + std::string(blm::to_string(variation)));
                  }
                }
              }
              blm::TwoLevelConfig config;
              config.recurrent = o->recurrent;
              config.latent_comparison = o->latent_comparison;
              encdec::TrainConfig tc;
              tc.epochs = o->epochs;
              tc.batch_size = o->batch_size;
              tc.adam.lr = o->lr;
              tc.patience = o->patience;
              tc.kl_weight = o->kl_weight;
              tc.seed = o->seed;
              std::optional<blm::TwoLevelModel> model;
              if (o->joint) {
                config.sentence.sparsify = parse_on_off(o->sparsify);
                model.emplace(config, o->seed);
                tc.tau_start = o->tau_start.value_or(1.0);
                tc.tau_end = o->tau_end.value_or(0.01);
              } else {
                auto sentence = encdec::MaskedEncoderModel::from_blocks(ad::read_checkpoint(o->sentence_checkpoint));
                config.sentence = sentence.config();
                tc.tau_start = o->tau_start.value_or(sentence.tau());
                tc.tau_end = o->tau_end.value_or(sentence.tau());
                model.emplace(config, std::move(sentence), o->seed);
              }
              encdec::EmbeddingTensors tensors(data.index);
              const auto curve_path = s.output("curve.jsonl");
              truncate_file(curve_path);
              const auto t0 = std::chrono::steady_clock::now();
              const auto result = blm::train_two_level(*model, data.of(grammar::Split::train),
                                                       data.of(grammar::Split::dev), tensors, tc,
                                                       [&](const encdec::EpochStats& e) {
                                                         write_json_line(curve_path, epoch_record(e), true);
                                                       });
              s.timing("train_seconds", seconds_since(t0));
              ad::write_checkpoint(s.output("model.ckpt"), model->to_blocks());
              const auto eval = blm::evaluate_blm(*model, data.of(grammar::Split::test), tensors);

              Json selection = Json::object();
              for (const auto& tag : blm::answer_tags(task)) {
                selection[tag] = eval.selection_frequency(tag);
              }
              Json metrics;
              metrics["stage"] = "blm";
              metrics["task"] = std::string(blm::to_string(task));
              metrics["variation"] = std::string(blm::to_string(variation));
              metrics["seed"] = o->seed;
              metrics["sparsify"] = config.sentence.sparsify;
              metrics["regime"] = o->joint ? "joint" : "pretrained";
              metrics["kl_weight"] = o->kl_weight;
              metrics["best_epoch"] = result.best_epoch;
              metrics["epochs_run"] = result.curve.size();
              metrics["train_instances"] = data.of(grammar::Split::train).size();
              metrics["test_instances"] = eval.count;
              metrics["test_accuracy"] = eval.accuracy;
              metrics["test_macro_f1"] = eval.macro_f1;
              metrics["selection"] = selection;
              if (o->chance_seeds > 0) {
                std::vector<std::uint64_t> seeds;
                for (std::size_t i = 0; i < o->chance_seeds; ++i) {
                  seeds.push_back(combine_seeds(o->seed, 0xc4a7ce + i));
                }
                const auto chance = blm::chance_accuracies(config, data.of(grammar::Split::test), tensors, seeds);
                const auto ms = encdec::mean_std(chance);
                metrics["chance_accuracy"] = ms.mean;
                metrics["chance_accuracy_std"] = ms.std;
              }
              write_json_line(s.output("metrics.json"), metrics);
              print_json_line(metrics);
            });
          }};
}

}  // namespace chunkloc::cli

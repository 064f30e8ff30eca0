#include <memory>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/encdec/latent.hpp"
#include "chunkloc/encdec/training.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "commands.hpp"
#include "data_io.hpp"

namespace chunkloc::cli {

namespace {

struct TrainOptions {
  fs::path data;
  fs::path embeddings;
  fs::path out;
  std::string sparsify = "on";
  std::uint64_t seed = 1;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t patience = 8;
  double tau_start = 1.0;
  double tau_end = 0.01;
  double kl_weight = 1.0;
  std::string activation = "elu";
  std::size_t latent = 5;
  bool eval_sample = false;
  bool resume = false;
};

}  // namespace

Command add_train(CLI::App& root) {
  auto o = std::make_shared<TrainOptions>();
  auto* cmd = root.add_subcommand("train", "train the sentence-level encoder-decoder and evaluate it");
  add_config_option(*cmd);
  cmd->add_option("--data", o->data, "directory written by generate --kind sentence")->required();
  cmd->add_option("--embeddings", o->embeddings, "EMB1 file row-aligned with sentences.tsv")->required();
  cmd->add_option("--out", o->out, "output directory")->required();
  cmd->add_option("--sparsify", o->sparsify, "on: masked latent heads, off: dense baseline")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "initialisation, shuffling and sampling seed")->capture_default_str();
  cmd->add_option("--epochs", o->epochs, "maximum epochs")->capture_default_str();
  cmd->add_option("--batch-size", o->batch_size, "minibatch size")->capture_default_str();
  cmd->add_option("--lr", o->lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--patience", o->patience, "early-stopping patience in epochs (0: off)")->capture_default_str();
  cmd->add_option("--tau-start", o->tau_start, "mask temperature at the first step")->capture_default_str();
  cmd->add_option("--tau-end", o->tau_end, "mask temperature at the last step")->capture_default_str();
  cmd->add_option("--kl-weight", o->kl_weight, "weight of the KL term (1: unweighted objective)")
      ->capture_default_str();
  cmd->add_option("--activation", o->activation, "elu, tanh or identity")->capture_default_str();
  cmd->add_option("--latent", o->latent, "latent units")->capture_default_str();
  cmd->add_flag("--eval-sample", o->eval_sample, "decode a sampled z at evaluation instead of mu");
  add_resume_option(*cmd, o->resume);
  return {cmd, [o] {
            const auto files = SentenceFiles::in(o->data);
            require_file(o->embeddings, "embedding file");
            StageSpec spec{"train", o->out, o->resume};
            spec.config = {{"sparsify", o->sparsify},   {"epochs", o->epochs},         {"batch_size", o->batch_size},
                           {"lr", o->lr},               {"patience", o->patience},     {"tau_start", o->tau_start},
                           {"tau_end", o->tau_end},     {"kl_weight", o->kl_weight},   {"activation", o->activation},
                           {"latent", o->latent},       {"eval_sample", o->eval_sample}};
            spec.seeds = {{"seed", o->seed}};
            spec.inputs = files.all();
            spec.inputs.push_back(o->embeddings);
            Stage stage(std::move(spec));
            return run_stage(stage, [&](Stage& s) {
              const auto data = load_sentence_data(files, o->embeddings);
              encdec::ModelConfig mc;
              mc.sparsify = parse_on_off(o->sparsify);
              mc.activation = ad::parse_activation(o->activation);
              mc.latent = o->latent;
              encdec::TrainConfig tc;
              tc.epochs = o->epochs;
              tc.batch_size = o->batch_size;
              tc.adam.lr = o->lr;
              tc.patience = o->patience;
              tc.tau_start = o->tau_start;
              tc.tau_end = o->tau_end;
              tc.kl_weight = o->kl_weight;
              tc.seed = o->seed;
              encdec::MaskedEncoderModel model(mc, o->seed);
              encdec::EmbeddingTensors tensors(data.index);
              const auto curve_path = s.output("curve.jsonl");
              truncate_file(curve_path);
              const auto t0 = std::chrono::steady_clock::now();
              const auto result = encdec::train(model, data.of(grammar::Split::train), data.of(grammar::Split::dev),
                                                tensors, tc, [&](const encdec::EpochStats& e) {
                                                  write_json_line(curve_path, epoch_record(e), true);
                                                });
              s.timing("train_seconds", seconds_since(t0));
              ad::write_checkpoint(s.output("model.ckpt"), model.to_blocks());

              const auto lookup = encdec::pattern_lookup(data.records);
              std::optional<Rng> sample_rng;
              if (o->eval_sample) {
                sample_rng.emplace(combine_seeds(o->seed, 0xe5a1));
              }
              const auto eval = encdec::evaluate(model, data.of(grammar::Split::test), tensors, lookup,
                                                 sample_rng ? &*sample_rng : nullptr);
              const auto train_latents = encdec::compute_latents(model, data.records_of(grammar::Split::train), data.index);
              const auto test_latents = encdec::compute_latents(model, data.records_of(grammar::Split::test), data.index);
              encdec::write_latents(s.output("latents_test.tsv"), test_latents);
              const auto probe = encdec::latent_probe(train_latents, test_latents);

              Json metrics;
              metrics["stage"] = "train";
              metrics["sparsify"] = mc.sparsify;
              metrics["seed"] = o->seed;
              metrics["kl_weight"] = o->kl_weight;
              metrics["best_epoch"] = result.best_epoch;
              metrics["epochs_run"] = result.curve.size();
              metrics["best_dev_loss"] = result.best_dev_loss;
              metrics["test_instances"] = eval.count;
              metrics["test_accuracy"] = eval.accuracy;
              metrics["test_macro_f1"] = eval.macro_f1;
              metrics["probe_accuracy"] = probe.accuracy;
              metrics["probe_macro_f1"] = probe.macro_f1;
              write_json_line(s.output("metrics.json"), metrics);
              print_json_line(metrics);
            });
          }};
}

}  // namespace chunkloc::cli

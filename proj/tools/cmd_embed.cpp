#include <memory>

#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/embed/synthetic.hpp"
#include "chunkloc/grammar/dataset.hpp"
#include "commands.hpp"

namespace chunkloc::cli {

namespace {

struct EmbedOptions {
  fs::path sentences;
  fs::path out;
  std::uint64_t seed = 1;
  double amplitude = 1.0;
  double lexical_noise = 0.3;
  double global_noise = 0.3;
  std::string blm_task;
  bool resume = false;
};

}  // namespace

Command add_embed_synthetic(CLI::App& root) {
  auto o = std::make_shared<EmbedOptions>();
  auto* cmd = root.add_subcommand("embed-synthetic",
                                  "write oracle embeddings (EMB1) row-aligned with a sentence file");
  add_config_option(*cmd);
  cmd->add_option("--sentences", o->sentences, "sentence file (sentence task or BLM)")->required();
  cmd->add_option("--out", o->out, "output directory")->required();
  cmd->add_option("--seed", o->seed, "noise seed")->capture_default_str();
  cmd->add_option("--amplitude", o->amplitude, "signal amplitude per feature block")->capture_default_str();
  cmd->add_option("--lexical-noise", o->lexical_noise, "std of the lexical noise term")->capture_default_str();
  cmd->add_option("--global-noise", o->global_noise, "std of the per-sentence noise term")->capture_default_str();
  cmd->add_option("--blm-task", o->blm_task,
                  "read a BLM sentence file and add the task's auxiliary feature blocks");
  add_resume_option(*cmd, o->resume);
  return {cmd, [o] {
            require_file(o->sentences, "sentence file");
            StageSpec spec{"embed-synthetic", o->out, o->resume};
            spec.config = {{"amplitude", o->amplitude},
                           {"lexical_noise", o->lexical_noise},
                           {"global_noise", o->global_noise},
                           {"blm_task", o->blm_task}};
            spec.seeds = {{"seed", o->seed}};
            spec.inputs = {o->sentences};
            Stage stage(std::move(spec));
            return run_stage(stage, [&](Stage& s) {
              std::vector<embed::EmbeddingMatrix> rows;
              embed::SyntheticEmbeddingSpec synth;
              if (o->blm_task.empty()) {
                synth = embed::SyntheticEmbeddingSpec::default_layout(o->seed);
              } else {
                synth = blm::blm_layout(blm::parse_task(o->blm_task), o->seed);
              }
              synth.amplitude = o->amplitude;
              synth.lexical_noise_std = o->lexical_noise;
              synth.global_noise_std = o->global_noise;
              synth.validate();
              if (o->blm_task.empty()) {
                for (const auto& r : grammar::read_sentences(o->sentences)) {
                  rows.push_back(embed::synthesize_embedding(r.pattern, embed::lexical_key_for_text(r.text), synth));
                }
              } else {
                for (const auto& r : blm::read_blm_sentences(o->sentences)) {
                  rows.push_back(blm::synthesize_sentence(r, synth));
                }
              }
              embed::write_embeddings(s.output("embeddings.emb"), rows);
              print_json_line({{"stage", "embed-synthetic"}, {"rows", rows.size()}});
            });
          }};
}

}  // namespace chunkloc::cli

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/blm/dataset.hpp"
#include "chunkloc/encdec/model.hpp"
#include "chunkloc/encdec/training.hpp"

namespace chunkloc::blm {

struct TwoLevelConfig {
  encdec::ModelConfig sentence;
  std::size_t latent = 5;
  // Ordered composition h_t = tanh(W [h_{t-1}; z_t] + b) of the sentence
  // latents instead of their concatenation.
  bool recurrent = false;
  // Compare a projection of the BLM latent with the candidates' sentence-level
  // mu instead of decoding to the embedding grid.
  bool latent_comparison = false;

  // Throws ParameterError on inconsistent sizes.
  void validate() const;
  std::size_t context_width() const { return kContextRows * sentence.latent; }
};

// Sentence level: a MaskedEncoderModel applied to each context row (its own
// decoder is not used). BLM level: dense encoder over the 7 sentence latents
// -> (mu, logvar) -> z -> ConvDecoder to the 32x24 grid.
class TwoLevelModel {
 public:
  struct Parameters {
    ad::Tensor rec_w;      // [width, width + sentence latent], recurrent only
    ad::Tensor rec_b;      // [width]
    ad::Tensor enc_w;      // [2 * latent, width]; rows [0, K) mu, [K, 2K) logvar
    ad::Tensor enc_b;      // [2 * latent]
    encdec::ConvDecoder decoder;
    ad::Tensor compare_w;  // [sentence latent, latent], latent comparison only
    ad::Tensor compare_b;  // [sentence latent]
  };

  struct Forward {
    std::vector<encdec::Encoding> rows;
    ad::Tensor mu;
    ad::Tensor logvar;
    ad::Tensor z;
    ad::Tensor output;  // decoded grid, or the latent-space prediction
  };

  TwoLevelModel(const TwoLevelConfig& config, std::uint64_t seed);
  // Starts from a trained sentence level. Throws ParameterError if its
  // configuration differs from config.sentence.
  TwoLevelModel(const TwoLevelConfig& config, encdec::MaskedEncoderModel sentence, std::uint64_t seed);

  const TwoLevelConfig& config() const { return config_; }
  encdec::MaskedEncoderModel& sentence() { return sentence_; }
  const encdec::MaskedEncoderModel& sentence() const { return sentence_; }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  // `context` holds the 7 embeddings as [1, 32, 24] tensors.
  Forward forward(std::span<const ad::Tensor> context, encdec::Phase phase, Rng* noise) const;
  // What the output is compared with: the raw embedding, or its sentence-level
  // mu (eval phase) under latent comparison.
  ad::Tensor candidate_repr(const ad::Tensor& embedding) const;

  // Sentence encoder (conv, heads, mask when sparsified) and the BLM level.
  std::vector<ad::Tensor> parameters() const;

  std::vector<ad::ParameterBlock> to_blocks() const;
  // Throws DataError on missing blocks or shape mismatch.
  static TwoLevelModel from_blocks(std::span<const ad::ParameterBlock> blocks);

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  void init_blm_level(std::uint64_t seed);
  std::vector<ad::Tensor> blm_tensors() const;

  TwoLevelConfig config_;
  encdec::MaskedEncoderModel sentence_;
  Parameters params_;
};

struct BlmLoss {
  ad::Tensor total;  // margin + kl_weight * kl
  double margin = 0.0;
  double kl = 0.0;   // 7 sentence-level terms plus the BLM-level term
};

// Max-margin over the instance's candidates plus the KL terms.
BlmLoss blm_instance_loss(const TwoLevelModel& model, const BlmInstance& inst, encdec::EmbeddingTensors& embeddings,
                          encdec::Phase phase, Rng* noise, double kl_weight = 1.0);

double blm_mean_loss(const TwoLevelModel& model, std::span<const BlmInstance> instances,
                     encdec::EmbeddingTensors& embeddings, double kl_weight = 1.0);

// Minibatch Adam over both levels with the same schedule, early stopping and
// best-dev restore as the sentence-level trainer. The temperature schedule
// applies to the sentence level when it is sparsified.
encdec::TrainResult train_two_level(TwoLevelModel& model, std::span<const BlmInstance> train_set,
                                    std::span<const BlmInstance> dev_set, encdec::EmbeddingTensors& embeddings,
                                    const encdec::TrainConfig& config, const encdec::EpochCallback& on_epoch = {});

struct BlmEvalResult {
  double accuracy = 0.0;
  // Mean F1 of the classes correct / incorrect over all candidate decisions.
  double macro_f1 = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> chosen;              // per instance
  std::map<std::string, std::size_t> selected;  // error tag -> times chosen

  double selection_frequency(const std::string& tag) const;
};

BlmEvalResult evaluate_blm(const TwoLevelModel& model, std::span<const BlmInstance> instances,
                           encdec::EmbeddingTensors& embeddings);

// Accuracy of untrained models initialised with each seed.
std::vector<double> chance_accuracies(const TwoLevelConfig& config, std::span<const BlmInstance> instances,
                                      encdec::EmbeddingTensors& embeddings, std::span<const std::uint64_t> seeds);

}  // namespace chunkloc::blm

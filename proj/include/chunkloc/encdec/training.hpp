#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "chunkloc/ad/adam.hpp"
#include "chunkloc/ad/tensor.hpp"
#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/encdec/model.hpp"
#include "chunkloc/grammar/dataset.hpp"

namespace chunkloc::encdec {

// Embeddings as graph constants [1, 32, 24], converted once per id.
class EmbeddingTensors {
 public:
  explicit EmbeddingTensors(const embed::EmbeddingIndex& index) : index_(&index) {}
  // Throws DataError naming the id when it has no embedding.
  const ad::Tensor& at(std::uint64_t id);

 private:
  const embed::EmbeddingIndex* index_;
  std::unordered_map<std::uint64_t, ad::Tensor> cache_;
};

// mm(decoded, candidates) = max(0, 1 - cos(decoded, correct) + mean_i cos(decoded, error_i)).
ad::Tensor ranking_loss(const ad::Tensor& decoded, std::span<const ad::Tensor> candidates,
                        std::size_t correct_index);

// Index of the candidate with the highest cosine to `decoded`; ties to the lowest index.
std::size_t select_candidate(std::span<const double> decoded, std::span<const ad::Tensor> candidates);

struct LossValue {
  ad::Tensor total;  // margin + kl
  double margin = 0.0;
  double kl = 0.0;
};

// Per-instance loss mm + kl_weight * KL(q(z | input) || N(0, I)).
LossValue instance_loss(const MaskedEncoderModel& model, const grammar::SentenceInstance& inst,
                        EmbeddingTensors& embeddings, Phase phase, Rng* noise, double kl_weight = 1.0);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  ad::AdamConfig adam;
  std::uint64_t seed = 1;
  double tau_start = 1.0;
  double tau_end = 0.01;
  // Epochs without dev-loss improvement before stopping; 0 disables.
  std::size_t patience = 8;
  // Multiplies the KL term; 1 is the unweighted objective.
  double kl_weight = 1.0;

  // Throws ParameterError on non-positive sizes or temperatures.
  void validate() const;
};

// Linear schedule over `total_steps` updates, tau_start at step 0 and tau_end
// at the last step.
double tau_at(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct EpochStats {
  std::size_t epoch = 0;
  double tau = 0.0;
  double train_loss = 0.0;
  double train_margin = 0.0;
  double train_kl = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_dev_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mean per-instance loss in the eval phase.
double mean_loss(const MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> instances,
                 EmbeddingTensors& embeddings, double kl_weight = 1.0);

// Minibatch Adam on the mean instance loss; the model is left at the
// best-dev-loss parameters (dev evaluated in the eval phase each epoch).
TrainResult train(MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> train_set,
                  std::span<const grammar::SentenceInstance> dev_set, EmbeddingTensors& embeddings,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

using PatternLookup = std::unordered_map<std::uint64_t, std::size_t>;
// Sentence id -> index into grammar::enumerate_patterns().
PatternLookup pattern_lookup(std::span<const grammar::SentenceRecord> records);

struct EvalResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;  // over the 14 input patterns
  std::size_t count = 0;
  std::vector<std::size_t> chosen;  // per instance
};

// Predicted class of an instance = pattern of the chosen candidate. Decodes
// z = mu, or a sample drawn from `sample_noise` when it is given.
EvalResult evaluate(const MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> instances,
                    EmbeddingTensors& embeddings, const PatternLookup& patterns, Rng* sample_noise = nullptr);

}  // namespace chunkloc::encdec

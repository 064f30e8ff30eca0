#include "chunkloc/encdec/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "chunkloc/encdec/metrics.hpp"
#include "chunkloc/util/error.hpp"

namespace chunkloc::encdec {

const ad::Tensor& EmbeddingTensors::at(std::uint64_t id) {
  if (const auto it = cache_.find(id); it != cache_.end()) {
    return it->second;
  }
  auto t = MaskedEncoderModel::as_input(index_->at(id));
  return cache_.emplace(id, std::move(t)).first->second;
}

ad::Tensor ranking_loss(const ad::Tensor& decoded, std::span<const ad::Tensor> candidates,
                        std::size_t correct_index) {
  if (correct_index >= candidates.size() || candidates.size() < 2) {
    throw ShapeError("ranking loss needs a valid correct index and at least two candidates");
  }
  ad::Tensor correct;
  std::vector<ad::Tensor> errors;
  errors.reserve(candidates.size() - 1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto s = ad::cosine_similarity(decoded, candidates[i]);
    if (i == correct_index) {
      correct = std::move(s);
    } else {
      errors.push_back(std::move(s));
    }
  }
  return ad::max_margin(correct, errors);
}

std::size_t select_candidate(std::span<const double> decoded, std::span<const ad::Tensor> candidates) {
  double decoded_norm = 0.0;
  for (const auto v : decoded) {
    decoded_norm += v * v;
  }
  decoded_norm = std::sqrt(decoded_norm);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = candidates[i].value();
    if (c.size() != decoded.size()) {
      throw ShapeError("candidate size differs from decoded output");
    }
    double dot = 0.0, cn = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      dot += decoded[j] * c[j];
      cn += c[j] * c[j];
    }
    const double denom = decoded_norm * std::sqrt(cn);
    const double score = denom > 0.0 ? dot / denom : 0.0;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

LossValue instance_loss(const MaskedEncoderModel& model, const grammar::SentenceInstance& inst,
                        EmbeddingTensors& embeddings, Phase phase, Rng* noise, double kl_weight) {
  const auto enc = model.encode(embeddings.at(inst.input_id), phase, noise);
  const auto decoded = model.decode(enc.z);
  std::vector<ad::Tensor> candidates;
  candidates.reserve(inst.candidate_ids.size());
  for (const auto id : inst.candidate_ids) {
    candidates.push_back(embeddings.at(id));
  }
  auto margin = ranking_loss(decoded, candidates, inst.correct_index);
  auto kl = ad::kl_standard_normal(enc.mu, enc.logvar);
  LossValue out;
  out.margin = margin.item();
  out.kl = kl.item();
  out.total = kl_weight == 1.0 ? ad::add(margin, kl) : ad::add(margin, ad::scale(kl, kl_weight));
  return out;
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) {
    throw ParameterError("epochs and batch size must be positive");
  }
  if (!(kl_weight >= 0.0)) {
    throw ParameterError("kl weight must be non-negative");
  }
  if (!(tau_start > 0.0) || !(tau_end > 0.0)) {
    throw ParameterError("temperatures must be positive");
  }
  adam.validate();
}

double tau_at(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  if (total_steps <= 1) {
    return config.tau_end;
  }
  const double t = static_cast<double>(std::min(step, total_steps - 1)) /
                   static_cast<double>(total_steps - 1);
  return config.tau_start + (config.tau_end - config.tau_start) * t;
}

double mean_loss(const MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> instances,
                 EmbeddingTensors& embeddings, double kl_weight) {
  if (instances.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& inst : instances) {
    total += instance_loss(model, inst, embeddings, Phase::eval, nullptr, kl_weight).total.item();
  }
  return total / static_cast<double>(instances.size());
}

TrainResult train(MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> train_set,
                  std::span<const grammar::SentenceInstance> dev_set, EmbeddingTensors& embeddings,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) {
    throw DataError("training set is empty");
  }
  for (const auto& inst : train_set) {
    embeddings.at(inst.input_id);
    for (const auto id : inst.candidate_ids) {
      embeddings.at(id);
    }
  }
  Rng order_rng(combine_seeds(config.seed, 0x0d3e));
  Rng noise_rng(combine_seeds(config.seed, 0x7015e));
  ad::Adam optimizer(model.parameters(), config.adam);

  const std::size_t batches = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  auto best = model.snapshot();
  double best_tau = model.tau();
  std::size_t stale = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t b = 0; b < batches; ++b) {
      if (model.config().sparsify) {
        model.set_tau(tau_at(config, step, total_steps));
      }
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, order.size());
      const double weight = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto loss = instance_loss(model, train_set[order[i]], embeddings, Phase::train, &noise_rng,
                                        config.kl_weight);
        loss.total.backward(weight);
        stats.train_loss += loss.total.item();
        stats.train_margin += loss.margin;
        stats.train_kl += loss.kl;
      }
      optimizer.step();
      ++step;
    }
    const double n = static_cast<double>(train_set.size());
    stats.train_loss /= n;
    stats.train_margin /= n;
    stats.train_kl /= n;
    stats.tau = model.tau();
    stats.dev_loss = dev_set.empty() ? stats.train_loss : mean_loss(model, dev_set, embeddings, config.kl_weight);
    result.curve.push_back(stats);
    if (on_epoch) {
      on_epoch(stats);
    }
    if (stats.dev_loss < result.best_dev_loss) {
      result.best_dev_loss = stats.dev_loss;
      result.best_epoch = epoch;
      best = model.snapshot();
      best_tau = model.tau();
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  model.restore(best);
  model.set_tau(best_tau);
  return result;
}

PatternLookup pattern_lookup(std::span<const grammar::SentenceRecord> records) {
  PatternLookup out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.emplace(r.id, grammar::pattern_index(r.pattern));
  }
  return out;
}

EvalResult evaluate(const MaskedEncoderModel& model, std::span<const grammar::SentenceInstance> instances,
                    EmbeddingTensors& embeddings, const PatternLookup& patterns, Rng* sample_noise) {
  auto pattern_of = [&](std::uint64_t id) {
    const auto it = patterns.find(id);
    if (it == patterns.end()) {
      throw DataError("no sentence record for id " + std::to_string(id));
    }
    return it->second;
  };
  EvalResult out;
  std::vector<std::size_t> truth, predicted;
  std::size_t hits = 0;
  for (const auto& inst : instances) {
    const auto enc = model.encode(embeddings.at(inst.input_id), Phase::eval, nullptr);
    ad::Tensor z = enc.z;
    if (sample_noise != nullptr) {
      std::vector<double> eps(enc.mu.size());
      for (auto& e : eps) {
        e = sample_noise->normal();
      }
      z = ad::reparam_sample(enc.mu, enc.logvar, eps);
    }
    const auto decoded = model.decode(z);
    std::vector<ad::Tensor> candidates;
    for (const auto id : inst.candidate_ids) {
      candidates.push_back(embeddings.at(id));
    }
    const auto chosen = select_candidate(decoded.value(), candidates);
    out.chosen.push_back(chosen);
    hits += chosen == inst.correct_index ? 1 : 0;
    truth.push_back(pattern_of(inst.input_id));
    predicted.push_back(pattern_of(inst.candidate_ids[chosen]));
  }
  out.count = instances.size();
  out.accuracy = instances.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(out.count);
  out.macro_f1 = macro_f1(truth, predicted, grammar::enumerate_patterns().size());
  return out;
}

}  // namespace chunkloc::encdec

#include "chunkloc/blm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chunkloc/encdec/metrics.hpp"
#include "chunkloc/util/error.hpp"

namespace chunkloc::blm {

namespace {

ad::Tensor uniform_parameter(ad::Shape shape, double bound, Rng& rng) {
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) {
    x = bound * (2.0 * rng.uniform() - 1.0);
  }
  return ad::Tensor::parameter(std::move(shape), std::move(v));
}

ad::Tensor zero_parameter(ad::Shape shape) {
  const auto n = ad::numel(shape);
  return ad::Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0));
}

ad::Tensor from_block(std::span<const ad::ParameterBlock> blocks, const std::string& name, const ad::Shape& shape) {
  const auto& b = ad::find_block(blocks, name);
  if (b.shape != shape) {
    throw DataError("checkpoint block '" + name + "' has shape " + ad::shape_str(b.shape) + ", expected " +
                    ad::shape_str(shape));
  }
  return ad::Tensor::parameter(b.shape, b.data);
}

ad::ParameterBlock to_block(const std::string& name, const ad::Tensor& t) {
  return {name, t.shape(), {t.value().begin(), t.value().end()}};
}

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

}  // namespace

void TwoLevelConfig::validate() const {
  sentence.validate();
  if (latent == 0) {
    throw ParameterError("BLM latent size must be positive");
  }
}

TwoLevelModel::TwoLevelModel(const TwoLevelConfig& config, std::uint64_t seed)
    : config_(config), sentence_(config.sentence, seed) {
  config_.validate();
  init_blm_level(seed);
}

TwoLevelModel::TwoLevelModel(const TwoLevelConfig& config, encdec::MaskedEncoderModel sentence, std::uint64_t seed)
    : config_(config), sentence_(std::move(sentence)) {
  config_.validate();
  if (!(sentence_.config() == config_.sentence)) {
    throw ParameterError("pretrained sentence model configuration differs from the two-level configuration");
  }
  init_blm_level(seed);
}

void TwoLevelModel::init_blm_level(std::uint64_t seed) {
  Rng rng(combine_seeds(seed, 0xb10c));
  const std::size_t width = config_.context_width();
  const std::size_t ks = config_.sentence.latent, k = config_.latent;
  if (config_.recurrent) {
    params_.rec_w = uniform_parameter({width, width + ks}, inv_sqrt(width + ks), rng);
    params_.rec_b = zero_parameter({width});
  }
  params_.enc_w = uniform_parameter({2 * k, width}, inv_sqrt(width), rng);
  params_.enc_b = zero_parameter({2 * k});
  params_.decoder = encdec::ConvDecoder::init(config_.sentence.conv, k, rng);
  if (config_.latent_comparison) {
    params_.compare_w = uniform_parameter({ks, k}, inv_sqrt(k), rng);
    params_.compare_b = zero_parameter({ks});
  }
}

TwoLevelModel::Forward TwoLevelModel::forward(std::span<const ad::Tensor> context, encdec::Phase phase,
                                              Rng* noise) const {
  if (context.size() != kContextRows) {
    throw ShapeError("two-level model expects 7 context embeddings, got " + std::to_string(context.size()));
  }
  Forward out;
  std::vector<ad::Tensor> zs;
  for (const auto& c : context) {
    out.rows.push_back(sentence_.encode(c, phase, noise));
    zs.push_back(out.rows.back().z);
  }
  ad::Tensor summary;
  if (config_.recurrent) {
    summary = ad::Tensor::zeros({config_.context_width()});
    for (const auto& z : zs) {
      const ad::Tensor parts[] = {summary, z};
      summary = ad::tanh(ad::linear(ad::concat(parts), params_.rec_w, params_.rec_b));
    }
  } else {
    summary = ad::concat(zs);
  }
  const std::size_t k = config_.latent;
  const auto heads = ad::linear(summary, params_.enc_w, params_.enc_b);
  out.mu = ad::slice(heads, 0, k);
  out.logvar = ad::slice(heads, k, k);
  if (phase == encdec::Phase::eval) {
    out.z = out.mu;
  } else {
    if (noise == nullptr) {
      throw ParameterError("train phase needs a noise generator");
    }
    std::vector<double> eps(k);
    for (auto& e : eps) {
      e = noise->normal();
    }
    out.z = ad::reparam_sample(out.mu, out.logvar, eps);
  }
  out.output = config_.latent_comparison
                   ? ad::linear(out.z, params_.compare_w, params_.compare_b)
                   : params_.decoder.decode(out.z, config_.sentence.conv, config_.sentence.activation);
  return out;
}

ad::Tensor TwoLevelModel::candidate_repr(const ad::Tensor& embedding) const {
  if (!config_.latent_comparison) {
    return embedding;
  }
  return sentence_.encode(embedding, encdec::Phase::eval, nullptr).mu;
}

std::vector<ad::Tensor> TwoLevelModel::blm_tensors() const {
  std::vector<ad::Tensor> out;
  if (config_.recurrent) {
    out.push_back(params_.rec_w);
    out.push_back(params_.rec_b);
  }
  out.push_back(params_.enc_w);
  out.push_back(params_.enc_b);
  if (config_.latent_comparison) {
    out.push_back(params_.compare_w);
    out.push_back(params_.compare_b);
  } else {
    for (const auto& t : params_.decoder.parameters()) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<ad::Tensor> TwoLevelModel::parameters() const {
  const auto& s = sentence_.params();
  std::vector<ad::Tensor> out{s.conv_w, s.conv_b, s.head_w, s.head_b};
  if (config_.sentence.sparsify) {
    out.push_back(s.mask_logits);
  }
  for (const auto& t : blm_tensors()) {
    out.push_back(t);
  }
  return out;
}

std::vector<ad::ParameterBlock> TwoLevelModel::to_blocks() const {
  auto out = sentence_.to_blocks("sentence.");
  out.push_back({"blm.config",
                 {3},
                 {static_cast<double>(config_.latent), config_.recurrent ? 1.0 : 0.0,
                  config_.latent_comparison ? 1.0 : 0.0}});
  const auto& p = params_;
  if (config_.recurrent) {
    out.push_back(to_block("blm.recurrent.weight", p.rec_w));
    out.push_back(to_block("blm.recurrent.bias", p.rec_b));
  }
  out.push_back(to_block("blm.encoder.weight", p.enc_w));
  out.push_back(to_block("blm.encoder.bias", p.enc_b));
  out.push_back(to_block("blm.decoder.dense.weight", p.decoder.dense_w));
  out.push_back(to_block("blm.decoder.dense.bias", p.decoder.dense_b));
  out.push_back(to_block("blm.decoder.deconv.weight", p.decoder.deconv_w));
  out.push_back(to_block("blm.decoder.deconv.bias", p.decoder.deconv_b));
  if (config_.latent_comparison) {
    out.push_back(to_block("blm.compare.weight", p.compare_w));
    out.push_back(to_block("blm.compare.bias", p.compare_b));
  }
  return out;
}

TwoLevelModel TwoLevelModel::from_blocks(std::span<const ad::ParameterBlock> blocks) {
  auto sentence = encdec::MaskedEncoderModel::from_blocks(blocks, "sentence.");
  const auto& cfg = ad::find_block(blocks, "blm.config").data;
  if (cfg.size() != 3 || !(cfg[0] >= 1.0)) {
    throw DataError("checkpoint blm.config block is malformed");
  }
  TwoLevelConfig config;
  config.sentence = sentence.config();
  config.latent = static_cast<std::size_t>(cfg[0]);
  config.recurrent = cfg[1] != 0.0;
  config.latent_comparison = cfg[2] != 0.0;
  TwoLevelModel m(config, std::move(sentence), 0);
  const std::size_t width = config.context_width(), ks = config.sentence.latent, k = config.latent;
  const auto& conv = config.sentence.conv;
  auto& p = m.params_;
  if (config.recurrent) {
    p.rec_w = from_block(blocks, "blm.recurrent.weight", {width, width + ks});
    p.rec_b = from_block(blocks, "blm.recurrent.bias", {width});
  }
  p.enc_w = from_block(blocks, "blm.encoder.weight", {2 * k, width});
  p.enc_b = from_block(blocks, "blm.encoder.bias", {2 * k});
  p.decoder.dense_w = from_block(blocks, "blm.decoder.dense.weight", {conv.output_nodes(), k});
  p.decoder.dense_b = from_block(blocks, "blm.decoder.dense.bias", {conv.output_nodes()});
  p.decoder.deconv_w = from_block(blocks, "blm.decoder.deconv.weight", conv.weight_shape());
  p.decoder.deconv_b = from_block(blocks, "blm.decoder.deconv.bias", {conv.in_channels});
  if (config.latent_comparison) {
    p.compare_w = from_block(blocks, "blm.compare.weight", {ks, k});
    p.compare_b = from_block(blocks, "blm.compare.bias", {ks});
  }
  return m;
}

std::vector<std::vector<double>> TwoLevelModel::snapshot() const {
  auto out = sentence_.snapshot();
  for (const auto& t : blm_tensors()) {
    out.emplace_back(t.value().begin(), t.value().end());
  }
  return out;
}

void TwoLevelModel::restore(const std::vector<std::vector<double>>& values) {
  const auto tensors = blm_tensors();
  const std::size_t sentence_count = sentence_.snapshot().size();
  if (values.size() != sentence_count + tensors.size()) {
    throw ShapeError("snapshot does not match the two-level parameter list");
  }
  sentence_.restore({values.begin(), values.begin() + static_cast<std::ptrdiff_t>(sentence_count)});
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto t = tensors[i];
    auto dst = t.mutable_value();
    const auto& src = values[sentence_count + i];
    if (dst.size() != src.size()) {
      throw ShapeError("snapshot tensor size mismatch");
    }
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

namespace {

std::vector<ad::Tensor> context_tensors(const BlmInstance& inst, encdec::EmbeddingTensors& embeddings) {
  std::vector<ad::Tensor> out;
  out.reserve(kContextRows);
  for (const auto id : inst.context) {
    out.push_back(embeddings.at(id));
  }
  return out;
}

std::vector<ad::Tensor> candidate_tensors(const TwoLevelModel& model, const BlmInstance& inst,
                                          encdec::EmbeddingTensors& embeddings) {
  std::vector<ad::Tensor> out;
  out.reserve(inst.candidates.size());
  for (const auto id : inst.candidates) {
    out.push_back(model.candidate_repr(embeddings.at(id)));
  }
  return out;
}

}  // namespace

BlmLoss blm_instance_loss(const TwoLevelModel& model, const BlmInstance& inst, encdec::EmbeddingTensors& embeddings,
                          encdec::Phase phase, Rng* noise, double kl_weight) {
  const auto context = context_tensors(inst, embeddings);
  const auto fwd = model.forward(context, phase, noise);
  const auto candidates = candidate_tensors(model, inst, embeddings);
  auto margin = encdec::ranking_loss(fwd.output, candidates, inst.correct_index);
  std::vector<ad::Tensor> kls;
  for (const auto& row : fwd.rows) {
    kls.push_back(ad::kl_standard_normal(row.mu, row.logvar));
  }
  kls.push_back(ad::kl_standard_normal(fwd.mu, fwd.logvar));
  auto kl = ad::sum(kls);
  BlmLoss out;
  out.margin = margin.item();
  out.kl = kl.item();
  out.total = kl_weight == 1.0 ? ad::add(margin, kl) : ad::add(margin, ad::scale(kl, kl_weight));
  return out;
}

double blm_mean_loss(const TwoLevelModel& model, std::span<const BlmInstance> instances,
                     encdec::EmbeddingTensors& embeddings, double kl_weight) {
  if (instances.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& inst : instances) {
    total += blm_instance_loss(model, inst, embeddings, encdec::Phase::eval, nullptr, kl_weight).total.item();
  }
  return total / static_cast<double>(instances.size());
}

encdec::TrainResult train_two_level(TwoLevelModel& model, std::span<const BlmInstance> train_set,
                                    std::span<const BlmInstance> dev_set, encdec::EmbeddingTensors& embeddings,
                                    const encdec::TrainConfig& config, const encdec::EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) {
    throw DataError("training set is empty");
  }
  for (const auto& inst : train_set) {
    context_tensors(inst, embeddings);
    for (const auto id : inst.candidates) {
      embeddings.at(id);
    }
  }
  Rng order_rng(combine_seeds(config.seed, 0x0d3e));
  Rng noise_rng(combine_seeds(config.seed, 0x7015e));
  ad::Adam optimizer(model.parameters(), config.adam);
  auto& sentence = model.sentence();

  const std::size_t batches = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  encdec::TrainResult result;
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  auto best = model.snapshot();
  double best_tau = sentence.tau();
  std::size_t stale = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    encdec::EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t b = 0; b < batches; ++b) {
      if (sentence.config().sparsify) {
        sentence.set_tau(encdec::tau_at(config, step, total_steps));
      }
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, order.size());
      const double weight = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto loss = blm_instance_loss(model, train_set[order[i]], embeddings, encdec::Phase::train,
                                            &noise_rng, config.kl_weight);
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
    stats.tau = sentence.tau();
    stats.dev_loss =
        dev_set.empty() ? stats.train_loss : blm_mean_loss(model, dev_set, embeddings, config.kl_weight);
    result.curve.push_back(stats);
    if (on_epoch) {
      on_epoch(stats);
    }
    if (stats.dev_loss < result.best_dev_loss) {
      result.best_dev_loss = stats.dev_loss;
      result.best_epoch = epoch;
      best = model.snapshot();
      best_tau = sentence.tau();
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  model.restore(best);
  sentence.set_tau(best_tau);
  return result;
}

double BlmEvalResult::selection_frequency(const std::string& tag) const {
  const auto it = selected.find(tag);
  return it == selected.end() || count == 0 ? 0.0
                                            : static_cast<double>(it->second) / static_cast<double>(count);
}

BlmEvalResult evaluate_blm(const TwoLevelModel& model, std::span<const BlmInstance> instances,
                           encdec::EmbeddingTensors& embeddings) {
  BlmEvalResult out;
  std::vector<std::size_t> truth, predicted;
  std::size_t hits = 0;
  for (const auto& inst : instances) {
    const auto context = context_tensors(inst, embeddings);
    const auto fwd = model.forward(context, encdec::Phase::eval, nullptr);
    const auto candidates = candidate_tensors(model, inst, embeddings);
    const auto chosen = encdec::select_candidate(fwd.output.value(), candidates);
    out.chosen.push_back(chosen);
    hits += chosen == inst.correct_index ? 1 : 0;
    ++out.selected[inst.tags[chosen]];
    for (std::size_t c = 0; c < inst.candidates.size(); ++c) {
      truth.push_back(c == inst.correct_index ? 1 : 0);
      predicted.push_back(c == chosen ? 1 : 0);
    }
  }
  out.count = instances.size();
  out.accuracy = instances.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(out.count);
  out.macro_f1 = encdec::macro_f1(truth, predicted, 2);
  return out;
}

std::vector<double> chance_accuracies(const TwoLevelConfig& config, std::span<const BlmInstance> instances,
                                      encdec::EmbeddingTensors& embeddings, std::span<const std::uint64_t> seeds) {
  std::vector<double> out;
  out.reserve(seeds.size());
  for (const auto seed : seeds) {
    const TwoLevelModel model(config, seed);
    out.push_back(evaluate_blm(model, instances, embeddings).accuracy);
  }
  return out;
}

}  // namespace chunkloc::blm

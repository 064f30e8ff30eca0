#include "chunkloc/encdec/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chunkloc/util/error.hpp"

namespace chunkloc::encdec {

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

ad::Tensor from_block(std::span<const ad::ParameterBlock> blocks, const std::string& name,
                      const ad::Shape& shape) {
  const auto& b = ad::find_block(blocks, name);
  if (b.shape != shape) {
    throw DataError("checkpoint block '" + name + "' has shape " + ad::shape_str(b.shape) +
                    ", expected " + ad::shape_str(shape));
  }
  return ad::Tensor::parameter(b.shape, b.data);
}

ad::ParameterBlock to_block(const std::string& name, const ad::Tensor& t) {
  return {name, t.shape(), {t.value().begin(), t.value().end()}};
}

std::vector<double> encode_config(const ModelConfig& c) {
  const auto& v = c.conv;
  return {static_cast<double>(v.in_channels), static_cast<double>(v.out_channels),
          static_cast<double>(v.kernel_h),    static_cast<double>(v.kernel_w),
          static_cast<double>(v.stride_h),    static_cast<double>(v.stride_w),
          static_cast<double>(v.input_h),     static_cast<double>(v.input_w),
          static_cast<double>(v.padded_h),    static_cast<double>(v.padded_w),
          static_cast<double>(c.latent),      static_cast<double>(c.activation),
          c.sparsify ? 1.0 : 0.0};
}

ModelConfig decode_config(const std::vector<double>& d) {
  if (d.size() != 13) {
    throw DataError("checkpoint config block has " + std::to_string(d.size()) + " values, expected 13");
  }
  auto sz = [&](std::size_t i) { return static_cast<std::size_t>(d[i]); };
  ModelConfig c;
  c.conv = {sz(0), sz(1), sz(2), sz(3), sz(4), sz(5), sz(6), sz(7), sz(8), sz(9)};
  c.latent = sz(10);
  if (d[11] < 0 || d[11] > 2) {
    throw DataError("checkpoint config has unknown activation code");
  }
  c.activation = static_cast<ad::Activation>(sz(11));
  c.sparsify = d[12] != 0.0;
  c.validate();
  return c;
}

}  // namespace

void ModelConfig::validate() const {
  conv.validate();
  if (latent == 0) {
    throw ParameterError("latent size must be positive");
  }
}

ConvDecoder ConvDecoder::init(const ad::ConvSpec& conv, std::size_t latent, Rng& rng) {
  const std::size_t nodes = conv.output_nodes();
  ConvDecoder d;
  d.dense_w = uniform_parameter({nodes, latent}, 1.0 / std::sqrt(static_cast<double>(latent)), rng);
  d.dense_b = zero_parameter({nodes});
  // Each output cell is covered by one window per channel.
  d.deconv_w = uniform_parameter(conv.weight_shape(),
                                 1.0 / std::sqrt(static_cast<double>(conv.out_channels)), rng);
  d.deconv_b = zero_parameter({conv.in_channels});
  return d;
}

ad::Tensor ConvDecoder::decode(const ad::Tensor& z, const ad::ConvSpec& conv,
                               ad::Activation activation) const {
  auto nodes = ad::activate(ad::linear(z, dense_w, dense_b), activation);
  return ad::conv_transpose2d(ad::reshape(nodes, conv.output_shape()), deconv_w, deconv_b, conv);
}

MaskedEncoderModel::MaskedEncoderModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(combine_seeds(seed, 0x30de1));
  const auto& conv = config_.conv;
  const std::size_t k = config_.latent;
  const double fan_in = static_cast<double>(conv.in_channels * conv.kernel_h * conv.kernel_w);
  params_.conv_w = uniform_parameter(conv.weight_shape(), 1.0 / std::sqrt(fan_in), rng);
  params_.conv_b = zero_parameter({conv.out_channels});
  params_.head_w = uniform_parameter({nodes(), 2 * k}, 1.0 / std::sqrt(static_cast<double>(nodes())), rng);
  params_.head_b = zero_parameter({2 * k});
  std::vector<double> logits(nodes() * k);
  for (auto& v : logits) {
    v = 0.01 * rng.normal();
  }
  params_.mask_logits = ad::Tensor::parameter({nodes(), k}, std::move(logits));
  params_.decoder = ConvDecoder::init(conv, k, rng);
}

void MaskedEncoderModel::set_tau(double tau) {
  if (!(tau > 0.0)) {
    throw ParameterError("mask temperature must be positive, got " + std::to_string(tau));
  }
  tau_ = tau;
}

ad::MaskMode MaskedEncoderModel::mask_mode(Phase phase) const {
  if (!config_.sparsify) {
    return ad::MaskMode::dense;
  }
  return phase == Phase::train ? ad::MaskMode::soft : ad::MaskMode::hard;
}

ad::Tensor MaskedEncoderModel::as_input(const embed::EmbeddingMatrix& m) {
  return ad::Tensor::constant({1, embed::kRows, embed::kCols}, m.to_doubles());
}

ad::Tensor MaskedEncoderModel::cnn_output(const ad::Tensor& input) const {
  const auto conv = ad::conv2d(input, params_.conv_w, params_.conv_b, config_.conv);
  return ad::activate(ad::reshape(conv, {nodes()}), config_.activation);
}

Encoding MaskedEncoderModel::encode_from_cnn(const ad::Tensor& cnn, Phase phase, Rng* noise) const {
  const std::size_t k = config_.latent;
  const auto heads = ad::masked_linear(cnn, params_.head_w, params_.mask_logits, params_.head_b, tau_,
                                       mask_mode(phase));
  Encoding e{cnn, ad::slice(heads, 0, k), ad::slice(heads, k, k), {}};
  if (phase == Phase::eval) {
    e.z = e.mu;
  } else {
    if (noise == nullptr) {
      throw ParameterError("training-phase encoding needs a noise generator");
    }
    std::vector<double> eps(k);
    for (auto& v : eps) {
      v = noise->normal();
    }
    e.z = ad::reparam_sample(e.mu, e.logvar, eps);
  }
  return e;
}

Encoding MaskedEncoderModel::encode(const ad::Tensor& input, Phase phase, Rng* noise) const {
  return encode_from_cnn(cnn_output(input), phase, noise);
}

Encoding MaskedEncoderModel::encode(const embed::EmbeddingMatrix& m, Phase phase, Rng* noise) const {
  return encode(as_input(m), phase, noise);
}

ad::Tensor MaskedEncoderModel::decode(const ad::Tensor& z) const {
  return params_.decoder.decode(z, config_.conv, config_.activation);
}

std::vector<std::size_t> MaskedEncoderModel::hardened_assignment() const {
  return ad::harden_assignment(params_.mask_logits.value(), nodes(), config_.latent);
}

std::vector<ad::Tensor> MaskedEncoderModel::parameters() const {
  std::vector<ad::Tensor> out{params_.conv_w, params_.conv_b, params_.head_w, params_.head_b};
  if (config_.sparsify) {
    out.push_back(params_.mask_logits);
  }
  for (const auto& t : params_.decoder.parameters()) {
    out.push_back(t);
  }
  return out;
}

std::vector<ad::Tensor> MaskedEncoderModel::all_tensors() const {
  std::vector<ad::Tensor> out{params_.conv_w, params_.conv_b, params_.head_w, params_.head_b,
                              params_.mask_logits};
  for (const auto& t : params_.decoder.parameters()) {
    out.push_back(t);
  }
  return out;
}

std::vector<ad::ParameterBlock> MaskedEncoderModel::to_blocks(const std::string& prefix) const {
  const auto& p = params_;
  return {
      {prefix + "config", {13}, encode_config(config_)},
      {prefix + "tau", {1}, {tau_}},
      to_block(prefix + "conv.weight", p.conv_w),
      to_block(prefix + "conv.bias", p.conv_b),
      to_block(prefix + "head.weight", p.head_w),
      to_block(prefix + "head.bias", p.head_b),
      to_block(prefix + "mask.logits", p.mask_logits),
      to_block(prefix + "decoder.dense.weight", p.decoder.dense_w),
      to_block(prefix + "decoder.dense.bias", p.decoder.dense_b),
      to_block(prefix + "decoder.deconv.weight", p.decoder.deconv_w),
      to_block(prefix + "decoder.deconv.bias", p.decoder.deconv_b),
  };
}

MaskedEncoderModel MaskedEncoderModel::from_blocks(std::span<const ad::ParameterBlock> blocks,
                                                   const std::string& prefix) {
  const auto config = decode_config(ad::find_block(blocks, prefix + "config").data);
  MaskedEncoderModel m(config, 0);
  const auto& tau = ad::find_block(blocks, prefix + "tau");
  if (tau.data.size() != 1) {
    throw DataError("checkpoint tau block must hold one value");
  }
  m.set_tau(tau.data[0]);
  const auto& conv = config.conv;
  const std::size_t k = config.latent, n = conv.output_nodes();
  auto& p = m.params_;
  p.conv_w = from_block(blocks, prefix + "conv.weight", conv.weight_shape());
  p.conv_b = from_block(blocks, prefix + "conv.bias", {conv.out_channels});
  p.head_w = from_block(blocks, prefix + "head.weight", {n, 2 * k});
  p.head_b = from_block(blocks, prefix + "head.bias", {2 * k});
  p.mask_logits = from_block(blocks, prefix + "mask.logits", {n, k});
  p.decoder.dense_w = from_block(blocks, prefix + "decoder.dense.weight", {n, k});
  p.decoder.dense_b = from_block(blocks, prefix + "decoder.dense.bias", {n});
  p.decoder.deconv_w = from_block(blocks, prefix + "decoder.deconv.weight", conv.weight_shape());
  p.decoder.deconv_b = from_block(blocks, prefix + "decoder.deconv.bias", {conv.in_channels});
  return m;
}

std::vector<std::vector<double>> MaskedEncoderModel::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& t : all_tensors()) {
    out.emplace_back(t.value().begin(), t.value().end());
  }
  return out;
}

void MaskedEncoderModel::restore(const std::vector<std::vector<double>>& values) {
  auto tensors = all_tensors();
  if (values.size() != tensors.size()) {
    throw ShapeError("snapshot does not match the model's parameter list");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto dst = tensors[i].mutable_value();
    if (dst.size() != values[i].size()) {
      throw ShapeError("snapshot tensor size mismatch");
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

std::vector<Region> conv_regions(const ad::ConvSpec& conv) {
  std::vector<Region> out;
  for (std::size_t gr = 0; gr < conv.out_h(); ++gr) {
    for (std::size_t gc = 0; gc < conv.out_w(); ++gc) {
      const std::size_t r0 = gr * conv.stride_h, c0 = gc * conv.stride_w;
      const std::size_t rows = r0 >= conv.input_h ? 0 : std::min(conv.kernel_h, conv.input_h - r0);
      const std::size_t cols = c0 >= conv.input_w ? 0 : std::min(conv.kernel_w, conv.input_w - c0);
      out.push_back({out.size(), gr, gc, r0, c0, rows, cols});
    }
  }
  return out;
}

NodeLocation locate_node(const ad::ConvSpec& conv, std::size_t node) {
  if (node >= conv.output_nodes()) {
    throw ShapeError("node id " + std::to_string(node) + " out of range");
  }
  return {node / conv.windows(), node % conv.windows()};
}

}  // namespace chunkloc::encdec

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chunkloc/ad/tensor.hpp"

namespace chunkloc::ad {

// Strided 2-D convolution over an input that is zero-padded at the bottom and
// right from input_h x input_w to padded_h x padded_w. The defaults produce a
// 3x2 window grid over a 32x24 input: 40 x 6 = 240 output nodes.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 40;
  std::size_t kernel_h = 15;
  std::size_t kernel_w = 15;
  std::size_t stride_h = 15;
  std::size_t stride_w = 15;
  std::size_t input_h = 32;
  std::size_t input_w = 24;
  std::size_t padded_h = 45;
  std::size_t padded_w = 30;

  std::size_t out_h() const { return (padded_h - kernel_h) / stride_h + 1; }
  std::size_t out_w() const { return (padded_w - kernel_w) / stride_w + 1; }
  std::size_t windows() const { return out_h() * out_w(); }
  std::size_t output_nodes() const { return out_channels * windows(); }
  Shape input_shape() const { return {in_channels, input_h, input_w}; }
  Shape weight_shape() const { return {out_channels, in_channels, kernel_h, kernel_w}; }
  Shape output_shape() const { return {out_channels, out_h(), out_w()}; }

  // Throws ParameterError on inconsistent sizes.
  void validate() const;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

// input [Cin, H, W], weight [Cout, Cin, kh, kw], bias [Cout] -> [Cout, OH, OW].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec);

// Adjoint of conv2d (including the crop that undoes the zero padding):
// input [Cout, OH, OW], weight [Cout, Cin, kh, kw], bias [Cin] -> [Cin, H, W].
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        const ConvSpec& spec);

// y = W x + b with W [out, in]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

enum class MaskMode : std::uint8_t {
  dense,  // every factor is 1
  soft,   // softmax(M / tau) per row
  hard,   // one-hot at the row argmax, lowest index on ties
};

// Row-wise softmax of logits [N, K] at temperature tau (> 0).
Tensor softmax_temperature(const Tensor& logits, double tau);

// Plain mask factors [N*K] for the given mode.
std::vector<double> mask_factors(std::span<const double> logits, std::size_t rows, std::size_t k,
                                 double tau, MaskMode mode);

// Row argmax of logits [N, K], ties to the lowest index.
std::vector<std::size_t> harden_assignment(std::span<const double> logits, std::size_t rows,
                                           std::size_t k);

// Per-node linear map into HxK outputs whose weights are scaled by the node's
// mask factors: out[h*K + k] = b[h*K + k] + sum_n W[n, h*K + k] m[n, k] x[n].
// x [N], weight [N, H*K], logits [N, K], bias [H*K]. All H heads of latent
// unit k share mask column k. Throws ParameterError when tau <= 0 in soft mode.
Tensor masked_linear(const Tensor& x, const Tensor& weight, const Tensor& logits, const Tensor& bias,
                     double tau, MaskMode mode);

enum class Activation : std::uint8_t { elu, tanh, identity };
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

Tensor elu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor activate(const Tensor& x, Activation a);

// z = mu + exp(logvar / 2) * noise.
Tensor reparam_sample(const Tensor& mu, const Tensor& logvar, std::span<const double> noise);

// -1/2 sum_k (1 + logvar_k - mu_k^2 - exp(logvar_k)).
Tensor kl_standard_normal(const Tensor& mu, const Tensor& logvar);

// Cosine of the flattened tensors. A zero-norm operand yields 0 and a warning.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// max(0, margin - correct + mean(errors)).
Tensor max_margin(const Tensor& correct, std::span<const Tensor> errors, double margin = 1.0);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(std::span<const Tensor> terms);
Tensor slice(const Tensor& x, std::size_t offset, std::size_t count);
Tensor concat(std::span<const Tensor> parts);
Tensor reshape(const Tensor& x, Shape shape);

}  // namespace chunkloc::ad

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chunkloc/ad/checkpoint.hpp"
#include "chunkloc/ad/ops.hpp"
#include "chunkloc/ad/tensor.hpp"
#include "chunkloc/embed/embedding.hpp"
#include "chunkloc/util/rng.hpp"

namespace chunkloc::encdec {

struct ModelConfig {
  ad::ConvSpec conv;
  std::size_t latent = 5;
  ad::Activation activation = ad::Activation::elu;
  bool sparsify = true;

  // Throws ParameterError on inconsistent sizes.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// train: soft mask at the current temperature, z sampled.
// eval:  hardened mask, z = mu.
enum class Phase : std::uint8_t { train, eval };

struct Encoding {
  ad::Tensor cnn;  // activated conv output, node n = channel * windows + window
  ad::Tensor mu;
  ad::Tensor logvar;
  ad::Tensor z;
};

// Dense latent -> nodes, activation, transposed conv back to the input grid.
struct ConvDecoder {
  ad::Tensor dense_w;   // [nodes, latent]
  ad::Tensor dense_b;   // [nodes]
  ad::Tensor deconv_w;  // conv weight shape
  ad::Tensor deconv_b;  // [in_channels]

  static ConvDecoder init(const ad::ConvSpec& conv, std::size_t latent, Rng& rng);
  // z [latent] -> [in_channels, input_h, input_w].
  ad::Tensor decode(const ad::Tensor& z, const ad::ConvSpec& conv, ad::Activation activation) const;
  std::vector<ad::Tensor> parameters() const { return {dense_w, dense_b, deconv_w, deconv_b}; }
};

// Sentence-level variational encoder-decoder: conv -> activation -> masked
// linear (mu, logvar heads) -> z -> ConvDecoder.
class MaskedEncoderModel {
 public:
  struct Parameters {
    ad::Tensor conv_w;       // [Cout, Cin, kh, kw]
    ad::Tensor conv_b;       // [Cout]
    ad::Tensor head_w;       // [nodes, 2 * latent]; columns [0, K) mu, [K, 2K) logvar
    ad::Tensor head_b;       // [2 * latent]
    ad::Tensor mask_logits;  // [nodes, latent]
    ConvDecoder decoder;
  };

  MaskedEncoderModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t nodes() const { return config_.conv.output_nodes(); }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  double tau() const { return tau_; }
  // Throws ParameterError unless tau > 0.
  void set_tau(double tau);
  ad::MaskMode mask_mode(Phase phase) const;

  static ad::Tensor as_input(const embed::EmbeddingMatrix& m);

  // Activated conv output [nodes].
  ad::Tensor cnn_output(const ad::Tensor& input) const;
  // `noise` is required in the train phase and ignored in eval.
  Encoding encode_from_cnn(const ad::Tensor& cnn, Phase phase, Rng* noise) const;
  Encoding encode(const ad::Tensor& input, Phase phase, Rng* noise) const;
  Encoding encode(const embed::EmbeddingMatrix& m, Phase phase, Rng* noise) const;
  ad::Tensor decode(const ad::Tensor& z) const;

  // Latent unit of every node under the hardened mask. Dense models map every
  // node to every unit; this returns the argmax assignment regardless.
  std::vector<std::size_t> hardened_assignment() const;

  // Trainable tensors (mask logits only when sparsify is on).
  std::vector<ad::Tensor> parameters() const;

  std::vector<ad::ParameterBlock> to_blocks(const std::string& prefix = "") const;
  // Throws DataError on missing blocks or shape mismatch.
  static MaskedEncoderModel from_blocks(std::span<const ad::ParameterBlock> blocks,
                                        const std::string& prefix = "");

  // Deep copy / restore of parameter values (used for best-dev snapshots).
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  std::vector<ad::Tensor> all_tensors() const;

  ModelConfig config_;
  Parameters params_;
  double tau_ = 1.0;
};

// Region covered by conv window w (row-major over the window grid), clipped
// to the input.
struct Region {
  std::size_t index;
  std::size_t grid_row;
  std::size_t grid_col;
  std::size_t row0;
  std::size_t col0;
  std::size_t rows;
  std::size_t cols;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
};

std::vector<Region> conv_regions(const ad::ConvSpec& conv);

struct NodeLocation {
  std::size_t channel;
  std::size_t window;
};
NodeLocation locate_node(const ad::ConvSpec& conv, std::size_t node);

}  // namespace chunkloc::encdec

#pragma once

#include <span>
#include <vector>

#include "chunkloc/ad/tensor.hpp"

namespace chunkloc::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Throws ParameterError on lr <= 0, betas outside [0, 1), eps <= 0.
  void validate() const;
};

// First and second moment estimates for one parameter.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

// One bias-corrected Adam update of `values` in place. `step` is the 1-based
// update count after this step.
void adam_update(std::span<double> values, std::span<const double> grads, AdamMoments& moments,
                 std::size_t step, const AdamConfig& config);

// Adam over a fixed list of parameters. step() consumes and zeroes their grads.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step();
  void zero_grad();
  std::size_t steps() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamMoments> moments_;
  AdamConfig config_;
  std::size_t steps_ = 0;
};

}  // namespace chunkloc::ad

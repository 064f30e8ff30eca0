#include "chunkloc/ad/adam.hpp"

#include <cmath>

#include "chunkloc/util/error.hpp"

namespace chunkloc::ad {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) {
    throw ParameterError("adam learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) {
    throw ParameterError("adam epsilon must be positive");
  }
}

void adam_update(std::span<double> values, std::span<const double> grads, AdamMoments& moments,
                 std::size_t step, const AdamConfig& config) {
  if (grads.size() != values.size()) {
    throw ShapeError("adam gradient size does not match parameter size");
  }
  if (moments.m.empty()) {
    moments.m.assign(values.size(), 0.0);
    moments.v.assign(values.size(), 0.0);
  }
  if (moments.m.size() != values.size() || moments.v.size() != values.size()) {
    throw ShapeError("adam state size does not match parameter size");
  }
  if (step == 0) {
    throw ParameterError("adam step count is 1-based");
  }
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    moments.m[i] = config.beta1 * moments.m[i] + (1.0 - config.beta1) * g;
    moments.v[i] = config.beta2 * moments.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    values[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {
  config_.validate();
}

void Adam::step() {
  ++steps_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(params_[i].mutable_value(), params_[i].grad(), moments_[i], steps_, config_);
    params_[i].zero_grad();
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    p.zero_grad();
  }
}

}  // namespace chunkloc::ad

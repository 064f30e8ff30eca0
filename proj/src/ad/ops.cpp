#include "chunkloc/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chunkloc/util/diagnostics.hpp"
#include "chunkloc/util/error.hpp"

namespace chunkloc::ad {

namespace {

void expect_shape(const Tensor& t, const Shape& shape, const char* what) {
  if (t.shape() != shape) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_str(shape) + ", got " +
                     shape_str(t.shape()));
  }
}

void expect_size(const Tensor& t, std::size_t n, const char* what) {
  if (t.size() != n) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                     std::to_string(t.size()));
  }
}

// Receives the gradient for input i, or an empty span when it needs none.
std::span<double> grad_of(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  if (!in.requires_grad) {
    return {};
  }
  return in.grad_buffer();
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride_h == 0 ||
      stride_w == 0) {
    throw ParameterError("conv spec sizes must be positive");
  }
  if (padded_h < input_h || padded_w < input_w || padded_h < kernel_h || padded_w < kernel_w) {
    throw ParameterError("conv padding must cover the input and the kernel");
  }
  if ((padded_h - kernel_h) % stride_h != 0 || (padded_w - kernel_w) % stride_w != 0) {
    throw ParameterError("conv stride does not tile the padded input");
  }
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvSpec& spec) {
  spec.validate();
  expect_shape(input, spec.input_shape(), "conv2d input");
  expect_shape(weight, spec.weight_shape(), "conv2d weight");
  expect_size(bias, spec.out_channels, "conv2d bias");
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
  const std::size_t H = spec.input_h, W = spec.input_w, oh = spec.out_h(), ow = spec.out_w();

  const auto x = input.value();
  const auto w = weight.value();
  const auto b = bias.value();
  std::vector<double> out(cout * oh * ow);
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = b[co];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const std::size_t iy = oy * sh + ky;
            if (iy >= H) {
              break;
            }
            const double* xrow = &x[(ci * H + iy) * W];
            const double* wrow = &w[((co * cin + ci) * kh + ky) * kw];
            const std::size_t x0 = ox * sw;
            const std::size_t n = x0 >= W ? 0 : std::min(kw, W - x0);
            for (std::size_t kx = 0; kx < n; ++kx) {
              acc += wrow[kx] * xrow[x0 + kx];
            }
          }
        }
        out[(co * oh + oy) * ow + ox] = acc;
      }
    }
  }
  return Tensor::make(spec.output_shape(), std::move(out), {input, weight, bias}, [spec](Node& self) {
    const std::size_t cin = spec.in_channels, cout = spec.out_channels;
    const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
    const std::size_t H = spec.input_h, W = spec.input_w, oh = spec.out_h(), ow = spec.out_w();
    const auto& x = self.inputs[0]->value;
    const auto& w = self.inputs[1]->value;
    auto gx = grad_of(self, 0);
    auto gw = grad_of(self, 1);
    auto gb = grad_of(self, 2);
    const auto& g = self.grad;
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = g[(co * oh + oy) * ow + ox];
          if (!gb.empty()) {
            gb[co] += go;
          }
          for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::size_t iy = oy * sh + ky;
              if (iy >= H) {
                break;
              }
              const std::size_t xbase = (ci * H + iy) * W;
              const std::size_t wbase = ((co * cin + ci) * kh + ky) * kw;
              const std::size_t x0 = ox * sw;
              const std::size_t n = x0 >= W ? 0 : std::min(kw, W - x0);
              if (!gx.empty()) {
                for (std::size_t kx = 0; kx < n; ++kx) {
                  gx[xbase + x0 + kx] += w[wbase + kx] * go;
                }
              }
              if (!gw.empty()) {
                for (std::size_t kx = 0; kx < n; ++kx) {
                  gw[wbase + kx] += x[xbase + x0 + kx] * go;
                }
              }
            }
          }
        }
      }
    }
  });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        const ConvSpec& spec) {
  spec.validate();
  expect_shape(input, spec.output_shape(), "conv_transpose2d input");
  expect_shape(weight, spec.weight_shape(), "conv_transpose2d weight");
  expect_size(bias, spec.in_channels, "conv_transpose2d bias");
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
  const std::size_t H = spec.input_h, W = spec.input_w, oh = spec.out_h(), ow = spec.out_w();

  const auto y = input.value();
  const auto w = weight.value();
  const auto b = bias.value();
  std::vector<double> out(cin * H * W);
  for (std::size_t ci = 0; ci < cin; ++ci) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(ci * H * W),
              out.begin() + static_cast<std::ptrdiff_t>((ci + 1) * H * W), b[ci]);
  }
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double yv = y[(co * oh + oy) * ow + ox];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const std::size_t iy = oy * sh + ky;
            if (iy >= H) {
              break;
            }
            double* orow = &out[(ci * H + iy) * W];
            const double* wrow = &w[((co * cin + ci) * kh + ky) * kw];
            const std::size_t x0 = ox * sw;
            const std::size_t n = x0 >= W ? 0 : std::min(kw, W - x0);
            for (std::size_t kx = 0; kx < n; ++kx) {
              orow[x0 + kx] += wrow[kx] * yv;
            }
          }
        }
      }
    }
  }
  return Tensor::make(spec.input_shape(), std::move(out), {input, weight, bias}, [spec](Node& self) {
    const std::size_t cin = spec.in_channels, cout = spec.out_channels;
    const std::size_t kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
    const std::size_t H = spec.input_h, W = spec.input_w, oh = spec.out_h(), ow = spec.out_w();
    const auto& y = self.inputs[0]->value;
    const auto& w = self.inputs[1]->value;
    auto gy = grad_of(self, 0);
    auto gw = grad_of(self, 1);
    auto gb = grad_of(self, 2);
    const auto& g = self.grad;
    if (!gb.empty()) {
      for (std::size_t ci = 0; ci < cin; ++ci) {
        gb[ci] += std::accumulate(g.begin() + static_cast<std::ptrdiff_t>(ci * H * W),
                                  g.begin() + static_cast<std::ptrdiff_t>((ci + 1) * H * W), 0.0);
      }
    }
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const std::size_t yi = (co * oh + oy) * ow + ox;
          const double yv = y[yi];
          double acc = 0.0;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::size_t iy = oy * sh + ky;
              if (iy >= H) {
                break;
              }
              const std::size_t gbase = (ci * H + iy) * W;
              const std::size_t wbase = ((co * cin + ci) * kh + ky) * kw;
              const std::size_t x0 = ox * sw;
              const std::size_t n = x0 >= W ? 0 : std::min(kw, W - x0);
              for (std::size_t kx = 0; kx < n; ++kx) {
                acc += w[wbase + kx] * g[gbase + x0 + kx];
              }
              if (!gw.empty()) {
                for (std::size_t kx = 0; kx < n; ++kx) {
                  gw[wbase + kx] += yv * g[gbase + x0 + kx];
                }
              }
            }
          }
          if (!gy.empty()) {
            gy[yi] += acc;
          }
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.shape().size() != 2) {
    throw ShapeError("linear weight must be 2-D, got " + shape_str(weight.shape()));
  }
  const std::size_t out_dim = weight.shape()[0], in_dim = weight.shape()[1];
  expect_size(x, in_dim, "linear input");
  const bool has_bias = bias.defined();
  if (has_bias) {
    expect_size(bias, out_dim, "linear bias");
  }
  const auto xv = x.value();
  const auto w = weight.value();
  std::vector<double> out(out_dim, 0.0);
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = has_bias ? bias[o] : 0.0;
    const double* wrow = &w[o * in_dim];
    for (std::size_t i = 0; i < in_dim; ++i) {
      acc += wrow[i] * xv[i];
    }
    out[o] = acc;
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) {
    inputs.push_back(bias);
  }
  return Tensor::make({out_dim}, std::move(out), std::move(inputs),
                      [out_dim, in_dim, has_bias](Node& self) {
                        const auto& xv = self.inputs[0]->value;
                        const auto& w = self.inputs[1]->value;
                        auto gx = grad_of(self, 0);
                        auto gw = grad_of(self, 1);
                        auto gb = has_bias ? grad_of(self, 2) : std::span<double>{};
                        const auto& g = self.grad;
                        for (std::size_t o = 0; o < out_dim; ++o) {
                          const double go = g[o];
                          if (!gb.empty()) {
                            gb[o] += go;
                          }
                          for (std::size_t i = 0; i < in_dim; ++i) {
                            if (!gx.empty()) {
                              gx[i] += w[o * in_dim + i] * go;
                            }
                            if (!gw.empty()) {
                              gw[o * in_dim + i] += xv[i] * go;
                            }
                          }
                        }
                      });
}

std::vector<double> mask_factors(std::span<const double> logits, std::size_t rows, std::size_t k,
                                 double tau, MaskMode mode) {
  std::vector<double> out(rows * k, 1.0);
  switch (mode) {
    case MaskMode::dense:
      break;
    case MaskMode::soft: {
      if (!(tau > 0.0)) {
        throw ParameterError("mask temperature must be positive, got " + std::to_string(tau));
      }
      for (std::size_t n = 0; n < rows; ++n) {
        const double* row = &logits[n * k];
        const double top = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          out[n * k + j] = std::exp((row[j] - top) / tau);
          z += out[n * k + j];
        }
        for (std::size_t j = 0; j < k; ++j) {
          out[n * k + j] /= z;
        }
      }
      break;
    }
    case MaskMode::hard: {
      const auto assignment = harden_assignment(logits, rows, k);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t n = 0; n < rows; ++n) {
        out[n * k + assignment[n]] = 1.0;
      }
      break;
    }
  }
  return out;
}

std::vector<std::size_t> harden_assignment(std::span<const double> logits, std::size_t rows,
                                           std::size_t k) {
  if (logits.size() != rows * k) {
    throw ShapeError("mask logits size does not match rows x k");
  }
  std::vector<std::size_t> out(rows, 0);
  for (std::size_t n = 0; n < rows; ++n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (logits[n * k + j] > logits[n * k + best]) {
        best = j;
      }
    }
    out[n] = best;
  }
  return out;
}

Tensor softmax_temperature(const Tensor& logits, double tau) {
  if (logits.shape().size() != 2) {
    throw ShapeError("softmax_temperature expects [N, K], got " + shape_str(logits.shape()));
  }
  const std::size_t rows = logits.shape()[0], k = logits.shape()[1];
  auto s = mask_factors(logits.value(), rows, k, tau, MaskMode::soft);
  return Tensor::make(logits.shape(), s, {logits}, [rows, k, tau](Node& self) {
    auto gm = grad_of(self, 0);
    const auto& s = self.value;
    const auto& g = self.grad;
    for (std::size_t n = 0; n < rows; ++n) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        dot += s[n * k + j] * g[n * k + j];
      }
      for (std::size_t j = 0; j < k; ++j) {
        gm[n * k + j] += s[n * k + j] * (g[n * k + j] - dot) / tau;
      }
    }
  });
}

Tensor masked_linear(const Tensor& x, const Tensor& weight, const Tensor& logits, const Tensor& bias,
                     double tau, MaskMode mode) {
  if (logits.shape().size() != 2 || weight.shape().size() != 2) {
    throw ShapeError("masked_linear expects 2-D weight and logits");
  }
  const std::size_t nodes = logits.shape()[0], k = logits.shape()[1];
  const std::size_t cols = weight.shape()[1];
  if (weight.shape()[0] != nodes || k == 0 || cols % k != 0) {
    throw ShapeError("masked_linear weight " + shape_str(weight.shape()) + " incompatible with logits " +
                     shape_str(logits.shape()));
  }
  expect_size(x, nodes, "masked_linear input");
  expect_size(bias, cols, "masked_linear bias");
  if (mode == MaskMode::soft && !(tau > 0.0)) {
    throw ParameterError("mask temperature must be positive, got " + std::to_string(tau));
  }
  auto factors = mask_factors(logits.value(), nodes, k, tau, mode);
  const auto xv = x.value();
  const auto w = weight.value();
  std::vector<double> out(bias.value().begin(), bias.value().end());
  for (std::size_t n = 0; n < nodes; ++n) {
    const double xn = xv[n];
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] += w[n * cols + j] * factors[n * k + j % k] * xn;
    }
  }
  return Tensor::make(
      {cols}, std::move(out), {x, weight, logits, bias},
      [nodes, k, cols, tau, mode, factors = std::move(factors)](Node& self) {
        const auto& xv = self.inputs[0]->value;
        const auto& w = self.inputs[1]->value;
        auto gx = grad_of(self, 0);
        auto gw = grad_of(self, 1);
        auto gm = mode == MaskMode::soft ? grad_of(self, 2) : std::span<double>{};
        auto gb = grad_of(self, 3);
        const auto& g = self.grad;
        std::vector<double> gfactor(k);
        for (std::size_t n = 0; n < nodes; ++n) {
          const double xn = xv[n];
          double gxn = 0.0;
          std::fill(gfactor.begin(), gfactor.end(), 0.0);
          for (std::size_t j = 0; j < cols; ++j) {
            const double wf = w[n * cols + j] * factors[n * k + j % k];
            gxn += wf * g[j];
            if (!gw.empty()) {
              gw[n * cols + j] += factors[n * k + j % k] * xn * g[j];
            }
            gfactor[j % k] += w[n * cols + j] * xn * g[j];
          }
          if (!gx.empty()) {
            gx[n] += gxn;
          }
          if (!gm.empty()) {
            double dot = 0.0;
            for (std::size_t u = 0; u < k; ++u) {
              dot += factors[n * k + u] * gfactor[u];
            }
            for (std::size_t u = 0; u < k; ++u) {
              gm[n * k + u] += factors[n * k + u] * (gfactor[u] - dot) / tau;
            }
          }
        }
        if (!gb.empty()) {
          for (std::size_t j = 0; j < cols; ++j) {
            gb[j] += g[j];
          }
        }
      });
}

Activation parse_activation(std::string_view name) {
  if (name == "elu") {
    return Activation::elu;
  }
  if (name == "tanh") {
    return Activation::tanh;
  }
  if (name == "identity") {
    return Activation::identity;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::elu: return "elu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Tensor elu(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto v = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = v[i] > 0.0 ? v[i] : std::expm1(v[i]);
  }
  return Tensor::make(x.shape(), std::move(out), {x}, [](Node& self) {
    const auto& v = self.inputs[0]->value;
    auto gx = grad_of(self, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      gx[i] += self.grad[i] * (v[i] > 0.0 ? 1.0 : self.value[i] + 1.0);
    }
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto v = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::tanh(v[i]);
  }
  return Tensor::make(x.shape(), std::move(out), {x}, [](Node& self) {
    auto gx = grad_of(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double t = self.value[i];
      gx[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Tensor activate(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::elu: return elu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

Tensor reparam_sample(const Tensor& mu, const Tensor& logvar, std::span<const double> noise) {
  expect_size(logvar, mu.size(), "reparam_sample logvar");
  if (noise.size() != mu.size()) {
    throw ShapeError("reparam_sample noise size mismatch");
  }
  std::vector<double> eps(noise.begin(), noise.end());
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
  }
  return Tensor::make(mu.shape(), std::move(out), {mu, logvar}, [eps = std::move(eps)](Node& self) {
    const auto& lv = self.inputs[1]->value;
    auto gmu = grad_of(self, 0);
    auto glv = grad_of(self, 1);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!gmu.empty()) {
        gmu[i] += self.grad[i];
      }
      if (!glv.empty()) {
        glv[i] += self.grad[i] * 0.5 * std::exp(0.5 * lv[i]) * eps[i];
      }
    }
  });
}

Tensor kl_standard_normal(const Tensor& mu, const Tensor& logvar) {
  expect_size(logvar, mu.size(), "kl_standard_normal logvar");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += 1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]);
  }
  return Tensor::make({}, {-0.5 * acc}, {mu, logvar}, [](Node& self) {
    const auto& m = self.inputs[0]->value;
    const auto& lv = self.inputs[1]->value;
    auto gmu = grad_of(self, 0);
    auto glv = grad_of(self, 1);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!gmu.empty()) {
        gmu[i] += g * m[i];
      }
      if (!glv.empty()) {
        glv[i] += g * 0.5 * (std::exp(lv[i]) - 1.0);
      }
    }
  });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  expect_size(b, a.size(), "cosine_similarity");
  const auto av = a.value();
  const auto bv = b.value();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na2 += av[i] * av[i];
    nb2 += bv[i] * bv[i];
  }
  if (na2 == 0.0 || nb2 == 0.0) {
    warn("cosine similarity of a zero-norm vector; defined as 0");
    return Tensor::make({}, {0.0}, {a, b}, [](Node&) {});
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double cos = dot / (na * nb);
  return Tensor::make({}, {cos}, {a, b}, [na, nb, cos](Node& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    auto ga = grad_of(self, 0);
    auto gb = grad_of(self, 1);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (!ga.empty()) {
        ga[i] += g * (bv[i] / (na * nb) - cos * av[i] / (na * na));
      }
      if (!gb.empty()) {
        gb[i] += g * (av[i] / (na * nb) - cos * bv[i] / (nb * nb));
      }
    }
  });
}

Tensor max_margin(const Tensor& correct, std::span<const Tensor> errors, double margin) {
  if (errors.empty()) {
    throw ShapeError("max_margin needs at least one error score");
  }
  expect_size(correct, 1, "max_margin correct score");
  double mean = 0.0;
  for (const auto& e : errors) {
    expect_size(e, 1, "max_margin error score");
    mean += e.item();
  }
  mean /= static_cast<double>(errors.size());
  const double hinge = margin - correct.item() + mean;
  const bool active = hinge > 0.0;
  std::vector<Tensor> inputs{correct};
  inputs.insert(inputs.end(), errors.begin(), errors.end());
  const double inv = 1.0 / static_cast<double>(errors.size());
  return Tensor::make({}, {active ? hinge : 0.0}, std::move(inputs), [active, inv](Node& self) {
    if (!active) {
      return;
    }
    const double g = self.grad[0];
    if (auto gc = grad_of(self, 0); !gc.empty()) {
      gc[0] -= g;
    }
    for (std::size_t i = 1; i < self.inputs.size(); ++i) {
      if (auto ge = grad_of(self, i); !ge.empty()) {
        ge[0] += g * inv;
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  expect_size(b, a.size(), "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] + b[i];
  }
  return Tensor::make(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto g = grad_of(self, k); !g.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += self.grad[i];
        }
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.value().begin(), a.value().end());
  for (auto& v : out) {
    v *= factor;
  }
  return Tensor::make(a.shape(), std::move(out), {a}, [factor](Node& self) {
    auto g = grad_of(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += factor * self.grad[i];
    }
  });
}

Tensor sum(std::span<const Tensor> terms) {
  if (terms.empty()) {
    return Tensor::scalar(0.0);
  }
  const std::size_t n = terms.front().size();
  std::vector<double> out(n, 0.0);
  for (const auto& t : terms) {
    expect_size(t, n, "sum");
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += t[i];
    }
  }
  return Tensor::make(terms.front().shape(), std::move(out), {terms.begin(), terms.end()},
                      [](Node& self) {
                        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                          if (auto g = grad_of(self, k); !g.empty()) {
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              g[i] += self.grad[i];
                            }
                          }
                        }
                      });
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t count) {
  if (offset + count > x.size()) {
    throw ShapeError("slice out of range");
  }
  std::vector<double> out(x.value().begin() + static_cast<std::ptrdiff_t>(offset),
                          x.value().begin() + static_cast<std::ptrdiff_t>(offset + count));
  return Tensor::make({count}, std::move(out), {x}, [offset](Node& self) {
    auto g = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      g[offset + i] += self.grad[i];
    }
  });
}

Tensor concat(std::span<const Tensor> parts) {
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.value().begin(), p.value().end());
  }
  const std::size_t total = out.size();
  return Tensor::make({total}, std::move(out), {parts.begin(), parts.end()},
                      [offsets = std::move(offsets)](Node& self) {
                        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                          if (auto g = grad_of(self, k); !g.empty()) {
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              g[i] += self.grad[offsets[k] + i];
                            }
                          }
                        }
                      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape from " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  std::vector<double> out(x.value().begin(), x.value().end());
  return Tensor::make(std::move(shape), std::move(out), {x}, [](Node& self) {
    auto g = grad_of(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i];
    }
  });
}

}  // namespace chunkloc::ad

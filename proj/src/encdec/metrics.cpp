#include "chunkloc/encdec/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "chunkloc/util/error.hpp"

namespace chunkloc::encdec {

double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("macro_f1: label vectors differ in length");
  }
  if (classes == 0) {
    throw ParameterError("macro_f1 needs at least one class");
  }
  std::vector<double> tp(classes, 0.0), fp(classes, 0.0), fn(classes, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) {
      throw ShapeError("macro_f1: label out of range");
    }
    if (truth[i] == predicted[i]) {
      tp[truth[i]] += 1;
    } else {
      fp[predicted[i]] += 1;
      fn[truth[i]] += 1;
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    total += denom > 0 ? 2 * tp[c] / denom : 0.0;
  }
  return total / static_cast<double>(classes);
}

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("accuracy: label vectors differ in length");
  }
  if (truth.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += truth[i] == predicted[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) {
    throw ParameterError("mean_std of an empty list");
  }
  double mean = 0.0;
  for (const auto v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto v : values) {
    var += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

std::string format_mean_std(const MeanStd& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.4f)", s.mean, s.std);
  return buf;
}

}  // namespace chunkloc::encdec

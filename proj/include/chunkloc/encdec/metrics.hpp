#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace chunkloc::encdec {

// Unweighted mean over classes 0..classes-1 of 2TP / (2TP + FP + FN). A class
// with no true and no predicted members contributes 0.
double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t classes);

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

// Population statistics (divisor n).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

// "0.977 (0.0095)".
std::string format_mean_std(const MeanStd& s);

}  // namespace chunkloc::encdec

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace chunkloc::localize {

enum class KsMethod : std::uint8_t { asymptotic, exact };

struct KsResult {
  double statistic = 0.0;  // sup |ECDF_a - ECDF_b|
  double p_value = 1.0;
};

// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

// D of two samples; inputs need not be sorted.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Exact P(D >= d) under the null for sample sizes n, m (no ties), by
// counting monotone lattice paths that stay strictly inside the band.
double ks_exact_p_value(std::size_t n, std::size_t m, double d);

// Two-sided test. Asymptotic p-value: Q((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D)
// with ne = n m / (n + m). Throws ParameterError if either sample has fewer
// than 2 values.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                       KsMethod method = KsMethod::asymptotic);

// Same test on inputs that are already sorted ascending.
KsResult ks_two_sample_sorted(std::span<const double> a, std::span<const double> b,
                              KsMethod method = KsMethod::asymptotic);

}  // namespace chunkloc::localize

#include "chunkloc/localize/ks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chunkloc/util/error.hpp"

namespace chunkloc::localize {

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) {
    return 1.0;
  }
  // The alternating series converges slowly for small lambda; use the Jacobi
  // theta transform there.
  if (lambda < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double w = std::sqrt(2.0 * std::numbers::pi) / lambda;
    double cdf = 0.0;
    for (int j = 1; j <= 64; ++j) {
      const double k = 2.0 * j - 1.0;
      const double term = std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-18 * cdf) {
        break;
      }
    }
    return std::clamp(1.0 - w * cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += sign * term;
    sign = -sign;
    if (term < 1e-18) {
      break;
    }
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

namespace {

double sorted_statistic(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) {
      ++i;
    }
    while (j < b.size() && b[j] == x) {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

void require_sample(std::span<const double> s, const char* which) {
  if (s.size() < 2) {
    throw ParameterError(std::string("KS test needs at least 2 values in sample ") + which + ", got " +
                         std::to_string(s.size()));
  }
}

}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sorted_statistic(sa, sb);
}

double ks_exact_p_value(std::size_t n, std::size_t m, double d) {
  if (n == 0 || m == 0) {
    throw ParameterError("exact KS p-value needs non-empty samples");
  }
  if (d <= 0.0) {
    return 1.0;
  }
  // Observed statistics are multiples of 1/(n m); work on that integer lattice.
  const auto nm = static_cast<double>(n) * static_cast<double>(m);
  const auto bound = static_cast<long long>(std::llround(d * nm));
  auto inside = [&](std::size_t i, std::size_t j) {
    const long long gap = static_cast<long long>(i * m) - static_cast<long long>(j * n);
    return std::llabs(gap) < bound;
  };
  // w[j] after row i is (#paths to (i, j) inside the band) / C(i + j, i).
  std::vector<double> w(m + 1, 0.0);
  w[0] = 1.0;
  for (std::size_t j = 1; j <= m; ++j) {
    w[j] = inside(0, j) ? w[j - 1] : 0.0;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    w[0] = inside(i, 0) ? w[0] : 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      if (!inside(i, j)) {
        w[j] = 0.0;
        continue;
      }
      const double s = static_cast<double>(i + j);
      w[j] = w[j] * static_cast<double>(i) / s + w[j - 1] * static_cast<double>(j) / s;
    }
  }
  return std::clamp(1.0 - w[m], 0.0, 1.0);
}

KsResult ks_two_sample_sorted(std::span<const double> a, std::span<const double> b, KsMethod method) {
  require_sample(a, "a");
  require_sample(b, "b");
  KsResult r;
  r.statistic = sorted_statistic(a, b);
  if (method == KsMethod::exact) {
    r.p_value = ks_exact_p_value(a.size(), b.size(), r.statistic);
  } else {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * r.statistic);
  }
  return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, KsMethod method) {
  require_sample(a, "a");
  require_sample(b, "b");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return ks_two_sample_sorted(sa, sb, method);
}

}  // namespace chunkloc::localize

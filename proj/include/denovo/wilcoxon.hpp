#pragma once

#include <cstddef>
#include <span>

namespace denovo {

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n = 0;     // non-zero differences
  bool exact = false;
  bool has_ties = false;

  double signed_statistic() const { return w_plus - w_minus; }
};

// Paired test on a[i] - b[i]. Exact null distribution for n <= 25 without
// tied magnitudes; normal approximation with continuity and tie correction
// otherwise. Throws UndefinedTestError when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// P(W+ <= w) under the null for ranks 1..n.
double wilcoxon_exact_cdf(std::size_t n, double w);

}  // namespace denovo

#include "denovo/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "denovo/errors.hpp"

namespace denovo {

namespace {
constexpr std::size_t kExactLimit = 25;
}

double wilcoxon_exact_cdf(std::size_t n, double w) {
  const std::size_t max_sum = n * (n + 1) / 2;
  // counts[s] = number of sign assignments with W+ == s; 2^25 fits a double exactly.
  std::vector<double> counts(max_sum + 1, 0.0);
  counts[0] = 1.0;
  for (std::size_t r = 1; r <= n; ++r)
    for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
  if (w < 0) return 0.0;
  const auto upto = static_cast<std::size_t>(std::min<double>(std::floor(w + 1e-9), static_cast<double>(max_sum)));
  double acc = 0.0;
  for (std::size_t s = 0; s <= upto; ++s) acc += counts[s];
  return acc / std::ldexp(1.0, static_cast<int>(n));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("wilcoxon: paired inputs differ in length");
  if (a.empty()) throw DomainError("wilcoxon: empty input");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (!std::isfinite(diff)) throw DomainError("wilcoxon: non-finite difference");
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw UndefinedTestError("wilcoxon: all differences are zero");

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

  WilcoxonResult res;
  res.n = n;
  std::vector<double> rank(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) {
      res.has_ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0 ? res.w_plus : res.w_minus) += rank[i];
  res.statistic = std::min(res.w_plus, res.w_minus);

  if (n <= kExactLimit && !res.has_ties) {
    res.exact = true;
    res.p_value = std::min(1.0, 2.0 * wilcoxon_exact_cdf(n, res.statistic));
    return res;
  }
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1) / 4.0;
  const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0) {
    res.p_value = 1.0;
    return res;
  }
  const double dev = std::max(0.0, std::abs(res.statistic - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

}  // namespace denovo

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace bflow {

/// Welford accumulator; deterministic for a fixed push order.
class RunningStat {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double std_error() const { return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline double z_score(double estimate, double oracle, double std_error) {
  if (std_error <= 0.0) return estimate == oracle ? 0.0 : std::copysign(1e300, estimate - oracle);
  return (estimate - oracle) / std_error;
}

inline double pooled_se(double se_a, double se_b) {
  return std::sqrt(se_a * se_a + se_b * se_b);
}

/// Spearman rank correlation (no tie correction; inputs here are distinct).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("spearman: need paired data");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

/// Pearson chi-square statistic against given cell probabilities.
inline double chi_square_stat(const std::vector<std::size_t>& observed,
                              const std::vector<double>& probs, std::size_t total) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi_square: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(total);
    if (expected <= 0.0) throw std::invalid_argument("chi_square: empty expected cell");
    const double d = static_cast<double>(observed[i]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

/// 99.9% chi-square quantiles for the dfs used by the harness.
inline double chi_square_crit_999(std::size_t df) {
  switch (df) {
    case 7: return 24.322;
    case 9: return 27.877;
    case 15: return 37.697;
    case 19: return 43.820;
    default: throw std::invalid_argument("chi_square_crit_999: df not tabulated");
  }
}

}  // namespace bflow

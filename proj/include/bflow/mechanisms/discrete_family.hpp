#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bflow/mechanisms/offspring_law.hpp"

namespace bflow {

/// θ-indexed offspring laws with a common per-individual event rate.
/// Admissibility: p_i(θ) nondecreasing in θ for i >= 1, p_0 nonincreasing,
/// θ ↦ g'_θ(1) continuous — checked on grids by validate().
class DiscreteFlowFamily {
 public:
  DiscreteFlowFamily(double rate, double theta_max,
                     std::function<OffspringLaw(double)> law_at)
      : rate_(rate), theta_max_(theta_max), law_at_(std::move(law_at)) {
    if (rate_ <= 0.0) throw std::invalid_argument("DiscreteFlowFamily: rate must be > 0");
    if (theta_max_ <= 0.0) throw std::invalid_argument("DiscreteFlowFamily: theta_max must be > 0");
    if (!law_at_) throw std::invalid_argument("DiscreteFlowFamily: missing law mapping");
  }

  double rate() const { return rate_; }
  double theta_max() const { return theta_max_; }

  OffspringLaw law_at(double theta) const {
    if (theta < 0.0 || theta > theta_max_ * (1.0 + 1e-12))
      throw std::domain_error("DiscreteFlowFamily: theta outside [0, theta_max]");
    return law_at_(std::min(theta, theta_max_));
  }

  /// p_0(θ) — the per-level kill band width.
  double death_prob(double theta) const { return law_at(theta).prob(0); }

  struct ValidationReport {
    bool monotone_ok = true;        // p_i nondecr (i>=1), p_0 nonincr, tol 1e-12
    double worst_violation = 0.0;   // most negative monotonicity margin
    std::size_t worst_index = 0;    // offending atom index
    double max_mean_step = 0.0;     // max |g'(1) successive difference| on the refinement grid
    bool ok() const { return monotone_ok; }
  };

  /// Grid check of the admissibility invariants. The g'(1)-continuity number
  /// is a heuristic: it reports the largest successive difference on a grid
  /// twice as fine as the monotonicity grid.
  ValidationReport validate(int grid_points = 101) const {
    ValidationReport rep;
    std::vector<OffspringLaw> laws;
    laws.reserve(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
      laws.push_back(law_at(theta_max_ * i / static_cast<double>(grid_points - 1)));
    for (int i = 0; i + 1 < grid_points; ++i) {
      const auto& lo = laws[i];
      const auto& hi = laws[i + 1];
      const std::size_t top = std::max(lo.support_bound(), hi.support_bound());
      for (std::size_t a = 0; a <= top; ++a) {
        const double d = hi.prob(a) - lo.prob(a);
        const double margin = (a == 0) ? -d : d;  // p_0 decreasing, others increasing
        if (margin < -1e-12 && margin < rep.worst_violation) {
          rep.monotone_ok = false;
          rep.worst_violation = margin;
          rep.worst_index = a;
        }
      }
    }
    const int fine = 2 * (grid_points - 1) + 1;
    double prev = law_at(0.0).mean();
    for (int i = 1; i < fine; ++i) {
      const double cur = law_at(theta_max_ * i / static_cast<double>(fine - 1)).mean();
      rep.max_mean_step = std::max(rep.max_mean_step, std::abs(cur - prev));
      prev = cur;
    }
    return rep;
  }

 private:
  double rate_;
  double theta_max_;
  std::function<OffspringLaw(double)> law_at_;
};

}  // namespace bflow

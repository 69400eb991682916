#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bflow/rng.hpp"

namespace bflow {

/// Finite-support probability law on {0,...,M} with generating function
/// g(s) = sum p_i s^i. The mean is cached at construction.
class OffspringLaw {
 public:
  explicit OffspringLaw(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("OffspringLaw: empty support");
    double sum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] >= 0.0))
        throw std::invalid_argument("OffspringLaw: negative probability");
      sum += probs_[i];
      mean += static_cast<double>(i) * probs_[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("OffspringLaw: probabilities must sum to 1 (tol 1e-12)");
    mean_ = mean;
  }

  std::size_t support_bound() const { return probs_.size() - 1; }
  double prob(std::size_t i) const { return i < probs_.size() ? probs_[i] : 0.0; }
  const std::vector<double>& probs() const { return probs_; }

  /// g(s) for s in [0,1]; exactly 1 at s = 1.
  double pgf(double s) const {
    if (s < 0.0 || s > 1.0) throw std::domain_error("pgf: s outside [0,1]");
    if (s == 1.0) return 1.0;
    double acc = 0.0;
    for (std::size_t i = probs_.size(); i-- > 0;) acc = acc * s + probs_[i];
    return acc;
  }

  /// Cached g'(1).
  double mean() const { return mean_; }

  double recompute_mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) m += static_cast<double>(i) * probs_[i];
    return m;
  }

  DiscreteCdf make_sampler() const { return DiscreteCdf(probs_); }

 private:
  std::vector<double> probs_;
  double mean_ = 0.0;
};

}  // namespace bflow

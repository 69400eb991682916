#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bflow/flowsim/path.hpp"

namespace bflow {

/// Measure view of a rescaled staircase: level q_i carries atom mass
/// (X(κq_i) - X(κq_{i-1}))/k. Valid when the top level is 1.
inline std::vector<double> rescaled_masses(std::span<const std::int64_t> counts, int k) {
  if (k < 1) throw std::invalid_argument("rescaled_masses: k must be >= 1");
  std::vector<double> masses(counts.size());
  std::int64_t prev = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    masses[j] = static_cast<double>(counts[j] - prev) / static_cast<double>(k);
    prev = counts[j];
  }
  return masses;
}

/// ⟨Y, f⟩ = Σ f(q_i) · mass_i for f given by its values at the levels.
inline double rescaled_pairing(std::span<const std::int64_t> counts, int k,
                               std::span<const double> f_at_levels) {
  if (f_at_levels.size() != counts.size())
    throw std::invalid_argument("rescaled_pairing: size mismatch");
  double acc = 0.0;
  std::int64_t prev = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    acc += f_at_levels[j] * static_cast<double>(counts[j] - prev);
    prev = counts[j];
  }
  return acc / static_cast<double>(k);
}

/// Total mass ⟨Y, 1⟩ = X(κ·1)/k.
inline double rescaled_total(std::span<const std::int64_t> counts, int k) {
  return static_cast<double>(counts.back()) / static_cast<double>(k);
}

/// Rescaled trajectory view over a recorded path.
class RescaledView {
 public:
  explicit RescaledView(const FlowPath& path) : path_(path) {
    if (path.levels.empty() || std::abs(path.levels.back() - 1.0) > 1e-12)
      throw std::invalid_argument("RescaledView: top level must be 1 for measure views");
  }

  int k() const { return path_.k_scale; }

  double level_value(std::span<const std::int64_t> counts, std::size_t j) const {
    return static_cast<double>(counts[j]) / static_cast<double>(path_.k_scale);
  }

  std::vector<double> masses(std::span<const std::int64_t> counts) const {
    return rescaled_masses(counts, path_.k_scale);
  }

  double pairing(std::span<const std::int64_t> counts, std::span<const double> f) const {
    return rescaled_pairing(counts, path_.k_scale, f);
  }

 private:
  const FlowPath& path_;
};

}  // namespace bflow

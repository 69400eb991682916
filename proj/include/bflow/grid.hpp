#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace bflow {

struct grid_mismatch_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Values of a function on the shared uniform partition of [0,1] with
/// cells + 1 nodes. As a function of x the object is the staircase taking
/// the right-node value on each cell (x_{l-1}, x_l]; this matches the
/// right-continuous reconstruction used for level staircases, and it keeps
/// x ∨ θ grid-closed when θ runs over the same partition.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(std::size_t cells, std::vector<double> node_values)
      : cells_(cells), values_(std::move(node_values)) {
    if (cells_ == 0 || values_.size() != cells_ + 1)
      throw std::invalid_argument("GridFunction: need cells+1 node values");
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("GridFunction: values must be finite and nonnegative");
  }

  GridFunction(std::size_t cells, const std::function<double(double)>& fn)
      : GridFunction(cells, sample(cells, fn)) {}

  static GridFunction constant(std::size_t cells, double value) {
    return GridFunction(cells, std::vector<double>(cells + 1, value));
  }

  /// Step extension of level data: value f_i on (q_{i-1}, q_i], f_1 at 0.
  /// Levels must sit on grid nodes and end at 1.
  static GridFunction from_levels(std::size_t cells, const std::vector<double>& levels,
                                  const std::vector<double>& level_values) {
    if (levels.empty() || levels.size() != level_values.size())
      throw std::invalid_argument("GridFunction::from_levels: size mismatch");
    if (std::abs(levels.back() - 1.0) > 1e-12)
      throw std::invalid_argument("GridFunction::from_levels: top level must be 1");
    std::vector<double> v(cells + 1);
    std::size_t li = 0;
    for (std::size_t j = 0; j <= cells; ++j) {
      const double x = static_cast<double>(j) / static_cast<double>(cells);
      while (li + 1 < levels.size() && x > levels[li] + 1e-12) ++li;
      v[j] = level_values[li];
    }
    return GridFunction(cells, std::move(v));
  }

  std::size_t cells() const { return cells_; }
  double node(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(cells_); }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }
  const std::vector<double>& values() const { return values_; }

  /// Index of the node equal to x; grid_mismatch_error if x is off-grid.
  std::size_t node_index(double x) const {
    const double scaled = x * static_cast<double>(cells_);
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 || rounded < 0 || rounded > static_cast<double>(cells_))
      throw grid_mismatch_error("point is not a node of the shared grid");
    return static_cast<std::size_t>(rounded);
  }

  /// Staircase value at arbitrary x in [0,1].
  double value_at(double x) const {
    if (x <= 0.0) return values_[0];
    const std::size_t l = static_cast<std::size_t>(
        std::ceil(x * static_cast<double>(cells_) - 1e-12));
    return values_[l > cells_ ? cells_ : l];
  }

  bool same_grid(const GridFunction& other) const { return cells_ == other.cells_; }

 private:
  static std::vector<double> sample(std::size_t cells, const std::function<double(double)>& fn) {
    std::vector<double> v(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j)
      v[j] = fn(static_cast<double>(j) / static_cast<double>(cells));
    return v;
  }

  std::size_t cells_ = 0;
  std::vector<double> values_;
};

}  // namespace bflow

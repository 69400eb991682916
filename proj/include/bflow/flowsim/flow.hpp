#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bflow/flowsim/path.hpp"
#include "bflow/flowsim/single.hpp"
#include "bflow/mechanisms/discrete_family.hpp"
#include "bflow/rng.hpp"

namespace bflow {

struct FlowOptions {
  std::uint64_t event_cap = 100'000'000;  // counts candidates, accepted or not
  bool validate = false;                  // assert level ordering after every event
  int sampler_cells = 100;                // uniform θ-cells besides the level points
};

/// Immutable sampling tables for one (family, level grid, θ-scale) triple.
/// Shared read-only across replicas.
///
/// Candidates are drawn from the driving randomness restricted to the
/// rectangle that can touch any level: reproduction marks with θ ≤ κq_n and
/// u ≤ X(q_n), kill marks with θ ≤ b(κq_1) and u ≤ X(q_n). A candidate that
/// affects no level is a no-op; everything else applies to the computed
/// level range. Restriction keeps the realization exact.
///
/// The θ-decomposition: an atom at 0 carrying the law at θ=0 restricted to
/// positive offspring, then cells between consecutive table nodes with mass
/// and offspring law taken from finite differences at the right node, θ
/// placed uniformly inside the cell. Table nodes always include every level
/// point κq_j, so cells never straddle a level and the joint law of the
/// level vector is exact.
class FlowDriver {
 public:
  FlowDriver(const DiscreteFlowFamily& fam, const LevelGrid& grid, double kappa,
             const FlowOptions& opts = {})
      : sigma_(fam.rate()), levels_(grid.levels), kappa_(kappa) {
    if (kappa_ <= 0.0) throw std::invalid_argument("FlowDriver: kappa must be > 0");
    const double theta_top = kappa_ * grid.top();
    if (theta_top > fam.theta_max() * (1.0 + 1e-12))
      throw std::domain_error("FlowDriver: kappa * top level exceeds theta_max");

    // θ-table nodes: 0, uniform cells, and every level point
    std::vector<double> nodes;
    const int cells = std::max(opts.sampler_cells, 1);
    nodes.reserve(static_cast<std::size_t>(cells) + levels_.size() + 2);
    for (int i = 0; i <= cells; ++i)
      nodes.push_back(theta_top * static_cast<double>(i) / static_cast<double>(cells));
    for (double q : levels_) nodes.push_back(kappa_ * q);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [&](double a, double b) { return b - a <= 1e-13 * (1.0 + theta_top); }),
                nodes.end());

    std::vector<OffspringLaw> laws;
    laws.reserve(nodes.size());
    for (double th : nodes) laws.push_back(fam.law_at(std::min(th, fam.theta_max())));

    level_b_.resize(levels_.size());
    for (std::size_t j = 0; j < levels_.size(); ++j)
      level_b_[j] = fam.law_at(std::min(kappa_ * levels_[j], fam.theta_max())).prob(0);

    // cell 0 is the atom at θ = 0
    const std::size_t ncells = nodes.size();
    cell_lo_.resize(ncells);
    cell_hi_.resize(ncells);
    cum_mass_.resize(ncells);
    cdf_offset_.resize(ncells + 1, 0);
    double cum = 0.0;
    for (std::size_t g = 0; g < ncells; ++g) {
      cell_lo_[g] = (g == 0) ? 0.0 : nodes[g - 1];
      cell_hi_[g] = nodes[g == 0 ? 0 : g];
      const OffspringLaw& hi = laws[g];
      const std::size_t top = (g == 0) ? hi.support_bound()
                                       : std::max(hi.support_bound(), laws[g - 1].support_bound());
      double mass = 0.0;
      cdf_offset_[g] = cdf_.size();
      for (std::size_t i = 1; i <= top; ++i) {
        double w = (g == 0) ? hi.prob(i) : hi.prob(i) - laws[g - 1].prob(i);
        if (w < 0.0) {
          if (w < -1e-9)
            throw std::invalid_argument("FlowDriver: family not admissible on the θ-table");
          w = 0.0;
        }
        mass += w;
        cdf_.push_back(mass);
      }
      cum += mass;
      cum_mass_[g] = cum;
    }
    cdf_offset_[ncells] = cdf_.size();
    birth_mass_ = cum;
    death_band_ = level_b_.front();
  }

  double sigma() const { return sigma_; }
  std::size_t level_count() const { return levels_.size(); }
  const std::vector<double>& levels() const { return levels_; }
  double kappa() const { return kappa_; }
  double level_death_prob(std::size_t j) const { return level_b_[j]; }

  /// σ·X(q_n)·[(1 - b(κq_n)) + b(κq_1)] — dominating candidate intensity.
  double candidate_rate(std::span<const std::int64_t> counts) const {
    return sigma_ * static_cast<double>(counts.back()) * (birth_mass_ + death_band_);
  }

  /// Affected-range computation for explicit marks (θ, u, z):
  ///   births touch the suffix {j : κq_j ≥ θ and X(q_j) ≥ u},
  ///   deaths the contiguous range {j : θ ≤ b(κq_j) and X(q_j) ≥ u}.
  /// std::nullopt when the range is empty (a no-op candidate).
  std::optional<FlowEvent> classify_candidate(std::span<const std::int64_t> counts,
                                              EventKind kind, double theta, double u,
                                              std::int64_t offspring) const {
    FlowEvent ev;
    ev.kind = kind;
    ev.theta = theta;
    ev.u = u;
    ev.offspring = offspring;
    const std::int32_t from_u = first_with_count(counts, u);
    if (from_u >= static_cast<std::int32_t>(counts.size())) return std::nullopt;
    if (kind == EventKind::birth) {
      std::int32_t from_theta = static_cast<std::int32_t>(counts.size());
      for (std::size_t j = 0; j < levels_.size(); ++j) {
        if (kappa_ * levels_[j] >= theta) { from_theta = static_cast<std::int32_t>(j); break; }
      }
      if (from_theta >= static_cast<std::int32_t>(counts.size())) return std::nullopt;
      ev.first_level = std::max(from_theta, from_u);
      ev.last_level = static_cast<std::int32_t>(counts.size()) - 1;
      return ev;
    }
    std::int32_t j1 = -1;
    for (std::size_t j = 0; j < level_b_.size(); ++j) {
      if (theta <= level_b_[j]) j1 = static_cast<std::int32_t>(j); else break;
    }
    if (from_u > j1) return std::nullopt;
    ev.first_level = from_u;
    ev.last_level = j1;
    return ev;
  }

  /// One candidate of the restricted driving randomness; std::nullopt when it
  /// affects no level. Event time is left at 0 for the caller.
  std::optional<FlowEvent> sample_candidate(std::span<const std::int64_t> counts,
                                            Rng& rng) const {
    const double x_top = static_cast<double>(counts.back());
    const double u = x_top * rng.uniform_pos();  // uniform on (0, X(q_n)]
    const double v = (birth_mass_ + death_band_) * rng.uniform01();
    if (v < birth_mass_) {
      // cell by inverse transform on the cumulative cell masses; θ uniform
      // inside the cell, offspring from the cell's increment law
      const std::size_t g = static_cast<std::size_t>(
          std::lower_bound(cum_mass_.begin(), cum_mass_.end(), v,
                           [](double c, double vv) { return c <= vv; }) -
          cum_mass_.begin());
      const double prev = (g == 0) ? 0.0 : cum_mass_[g - 1];
      const double mass = cum_mass_[g] - prev;
      const double theta =
          (g == 0) ? 0.0
                   : cell_lo_[g] + (cell_hi_[g] - cell_lo_[g]) * std::min((v - prev) / mass, 1.0);
      return classify_candidate(counts, EventKind::birth, theta, u, sample_offspring(g, rng));
    }
    const double theta = death_band_ - (v - birth_mass_);  // uniform on (0, b(κq_1)]
    return classify_candidate(counts, EventKind::death, theta, u, 0);
  }

 private:
  static std::int32_t first_with_count(std::span<const std::int64_t> counts, double u) {
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (static_cast<double>(counts[j]) >= u) return static_cast<std::int32_t>(j);
    return static_cast<std::int32_t>(counts.size());  // unreachable when u <= top
  }

  std::int64_t sample_offspring(std::size_t cell, Rng& rng) const {
    const std::size_t lo = cdf_offset_[cell], hi = cdf_offset_[cell + 1];
    const double total = cdf_[hi - 1];
    const double w = rng.uniform01() * total;
    std::size_t a = lo, b = hi - 1;
    while (a < b) {
      const std::size_t mid = (a + b) / 2;
      if (cdf_[mid] > w) b = mid; else a = mid + 1;
    }
    return static_cast<std::int64_t>(a - lo + 1);  // cdf runs over z = 1,2,...
  }

  double sigma_;
  std::vector<double> levels_;
  double kappa_;
  std::vector<double> level_b_;
  double birth_mass_ = 0.0;
  double death_band_ = 0.0;
  std::vector<double> cell_lo_, cell_hi_, cum_mass_;
  std::vector<double> cdf_;
  std::vector<std::size_t> cdf_offset_;
};

namespace detail {

inline void check_flow_invariants(const FlowEvent& ev, std::span<const std::int64_t> before,
                                  std::span<const std::int64_t> after) {
  if (ev.kind == EventKind::death && ev.first_level > 0) {
    // the decremented range starts strictly above the level below it
    if (!(static_cast<double>(before[static_cast<std::size_t>(ev.first_level) - 1]) < ev.u))
      throw std::logic_error("flow invariant: death range not protected by the u mark");
  }
  std::int64_t prev = 0;
  for (std::int64_t c : after) {
    if (c < prev || c < 0) throw std::logic_error("flow invariant: level ordering violated");
    prev = c;
  }
}

}  // namespace detail

/// Exact coupled simulation of the level staircase under one stream of
/// driving randomness. Level ordering is preserved event-by-event.
template <class Sink>
void simulate_flow_into(const FlowDriver& driver, std::span<const std::int64_t> x0,
                        double horizon, Rng& rng, Sink& sink, const FlowOptions& opts = {}) {
  if (x0.size() != driver.level_count())
    throw std::invalid_argument("simulate_flow: state size does not match the grid");
  FlowState init{0.0, {x0.begin(), x0.end()}};
  init.require_valid();
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("simulate_flow: horizon must be positive and finite");

  std::vector<std::int64_t> counts = std::move(init.counts);
  std::vector<std::int64_t> before;
  double t = 0.0;
  std::uint64_t candidates = 0, noops = 0;
  while (counts.back() > 0) {
    const double rate = driver.candidate_rate(counts);
    if (!(rate > 0.0)) break;
    double tn = t + rng.exponential(rate);
    if (!(tn < horizon)) break;
    if (tn <= t) tn = std::nextafter(t, horizon);
    if (++candidates > opts.event_cap)
      throw resource_error("simulate_flow: candidate cap exceeded");
    sink.hold(t, tn, counts);
    t = tn;
    auto ev = driver.sample_candidate(counts, rng);
    if (!ev) { ++noops; continue; }
    ev->time = tn;
    if (opts.validate) before = counts;
    FlowPath::apply(*ev, counts);
    if (opts.validate) detail::check_flow_invariants(*ev, before, counts);
    sink.event(*ev, counts);
  }
  sink.hold(t, horizon, counts);
  sink.finish(horizon, counts, noops);
}

/// Recorded variant.
inline FlowPath simulate_flow(const DiscreteFlowFamily& fam, const LevelGrid& grid, double kappa,
                              std::span<const std::int64_t> x0, double horizon, SeedSpec seed,
                              const FlowOptions& opts = {}, std::string family_id = "custom",
                              int k_scale = 1) {
  const FlowDriver driver(fam, grid, kappa, opts);
  Rng rng = seed.make_rng();
  RecordingSink sink(grid.levels, kappa, k_scale, std::move(family_id), seed, x0);
  simulate_flow_into(driver, x0, horizon, rng, sink, opts);
  return sink.take();
}

}  // namespace bflow

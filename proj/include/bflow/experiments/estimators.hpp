#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bflow/experiments/replicas.hpp"
#include "bflow/experiments/sinks.hpp"
#include "bflow/experiments/statistics.hpp"
#include "bflow/flowsim/flow.hpp"
#include "bflow/flowsim/path_io.hpp"
#include "bflow/flowsim/single.hpp"

namespace bflow {

/// Replica ensemble of the single branching process.
struct SinglePlan {
  OffspringLaw law;
  double sigma = 1.0;
  std::int64_t x0 = 1;
  double horizon = 1.0;
  std::uint64_t master_seed = 1;
  std::size_t replicas = 100000;
  int k_scale = 1;
  SimOptions opts;
};

/// Replica ensemble of the coupled level flow.
struct FlowPlan {
  DiscreteFlowFamily family;
  LevelGrid grid;
  double kappa = 1.0;
  std::vector<std::int64_t> x0;
  double horizon = 1.0;
  std::uint64_t master_seed = 1;
  std::size_t replicas = 100000;
  int k_scale = 1;
  FlowOptions opts;
  std::string label = "custom";
};

namespace detail {

inline void check_times(std::span<const double> times, double horizon) {
  double prev = -1.0;
  for (double t : times) {
    if (t < 0.0 || t > horizon || t <= prev)
      throw std::invalid_argument("query times must be sorted, distinct, within [0, horizon]");
    prev = t;
  }
  if (times.empty()) throw std::invalid_argument("need at least one query time");
}

}  // namespace detail

struct LaplaceEstimate {
  double point_estimate = 1.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
};

/// Monte Carlo E exp(-⟨Y_t, f⟩) for every query time; f given by its values
/// at the grid levels, the pairing through the rescaled measure view.
inline std::vector<LaplaceEstimate> estimate_laplace(const FlowPlan& plan,
                                                     std::span<const double> f_levels,
                                                     std::span<const double> times,
                                                     int workers = 0) {
  if (plan.replicas < 100) throw std::invalid_argument("estimate_laplace: need >= 100 replicas");
  if (f_levels.size() != plan.grid.size())
    throw std::invalid_argument("estimate_laplace: f must be given at every level");
  for (double v : f_levels)
    if (v < 0.0) throw std::invalid_argument("estimate_laplace: f must be nonnegative");
  detail::check_times(times, plan.horizon);
  const FlowDriver driver(plan.family, plan.grid, plan.kappa, plan.opts);
  const std::vector<double> f(f_levels.begin(), f_levels.end());
  const std::vector<double> ts(times.begin(), times.end());

  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, false);
    simulate_flow_into(driver, plan.x0, plan.horizon, rng, sink, plan.opts);
    std::vector<double> vals(ts.size());
    for (std::size_t ti = 0; ti < ts.size(); ++ti)
      vals[ti] = std::exp(-rescaled_pairing(sink.at(ti), plan.k_scale, f));
    return vals;
  };
  const auto results = map_replicas<std::vector<double>>(plan.replicas, workers, per_replica);

  std::vector<RunningStat> stats(ts.size());
  for (const auto& vals : results)
    for (std::size_t ti = 0; ti < ts.size(); ++ti) stats[ti].push(vals[ti]);
  std::vector<LaplaceEstimate> out(ts.size());
  for (std::size_t ti = 0; ti < ts.size(); ++ti)
    out[ti] = {stats[ti].mean(), stats[ti].std_error(), plan.replicas};
  return out;
}

/// Scalar variant: E exp(-λ X_t / k) for the single process.
inline std::vector<LaplaceEstimate> estimate_laplace(const SinglePlan& plan, double lambda,
                                                     std::span<const double> times,
                                                     int workers = 0) {
  if (plan.replicas < 100) throw std::invalid_argument("estimate_laplace: need >= 100 replicas");
  if (lambda < 0.0) throw std::invalid_argument("estimate_laplace: lambda must be >= 0");
  detail::check_times(times, plan.horizon);
  const DiscreteCdf sampler = plan.law.make_sampler();
  const std::vector<double> ts(times.begin(), times.end());
  const double scale = lambda / static_cast<double>(plan.k_scale);

  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, false);
    simulate_single_into(sampler, plan.sigma, plan.x0, plan.horizon, rng, sink, plan.opts);
    std::vector<double> vals(ts.size());
    for (std::size_t ti = 0; ti < ts.size(); ++ti)
      vals[ti] = std::exp(-scale * static_cast<double>(sink.at(ti)[0]));
    return vals;
  };
  const auto results = map_replicas<std::vector<double>>(plan.replicas, workers, per_replica);

  std::vector<RunningStat> stats(ts.size());
  for (const auto& vals : results)
    for (std::size_t ti = 0; ti < ts.size(); ++ti) stats[ti].push(vals[ti]);
  std::vector<LaplaceEstimate> out(ts.size());
  for (std::size_t ti = 0; ti < ts.size(); ++ti)
    out[ti] = {stats[ti].mean(), stats[ti].std_error(), plan.replicas};
  return out;
}

/// Over an explicit replica set of recorded paths.
inline LaplaceEstimate estimate_laplace(std::span<const FlowPath> paths,
                                        std::span<const double> f_levels, double t) {
  if (paths.size() < 100) throw std::invalid_argument("estimate_laplace: need >= 100 replicas");
  const std::vector<double> f(f_levels.begin(), f_levels.end());
  RunningStat stat;
  for (const auto& p : paths) {
    const auto state = states_at(p, {t}).front();
    stat.push(std::exp(-rescaled_pairing(state, p.k_scale, f)));
  }
  return {stat.mean(), stat.std_error(), paths.size()};
}

}  // namespace bflow

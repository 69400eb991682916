#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bflow/cumulant/solvers.hpp"
#include "bflow/experiments/estimators.hpp"
#include "bflow/mechanisms/recipe.hpp"

namespace bflow {

/// Test function for Laplace-functional comparisons, as its values at the
/// flow levels (step version on the level grid).
struct ExperimentFSpec {
  std::string id;
  std::vector<double> f_levels;
};

/// Builds the joint-transform step function f(x) = Σ λ_i 1_{x ≤ a_i} on a
/// level grid, returned as its per-level values.
inline std::vector<double> joint_transform_levels(const std::vector<double>& levels,
                                                  const std::vector<double>& lambdas) {
  if (levels.size() != lambdas.size())
    throw std::invalid_argument("joint_transform_levels: size mismatch");
  std::vector<double> f(levels.size());
  double acc = 0.0;
  for (std::size_t i = levels.size(); i-- > 0;) {
    acc += lambdas[i];
    f[i] = acc;
  }
  return f;
}

struct ConvergenceCell {
  int k = 0;
  double sigma_k = 0.0;
  double t = 0.0;
  std::string f_id;
  double estimate = 0.0;
  double std_error = 0.0;
  double oracle = 0.0;
  double gap = 0.0;
  double z = 0.0;
  double slack = 0.0;
  bool pass = false;  // gap <= 3·SE + slack(k)
};

struct ConvergenceTrend {
  std::string f_id;
  double t = 0.0;
  std::vector<double> gaps;     // ordered by k_list
  double spearman_rho = 0.0;    // rank correlation of (k, gap)
  bool nonincreasing = true;    // up to 2·pooled-SE noise
};

struct ConvergenceReport {
  std::string family;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  double c_slack = 0.0;
  std::size_t replicas = 0;
  std::vector<int> k_list;
  std::vector<ConvergenceCell> cells;
  std::vector<ConvergenceTrend> trends;
  std::size_t big_z_count = 0;  // cells with |z| > 3 (SE > 0 only)
  std::size_t z_cells = 0;
  bool sigma_b0_warning = false;
  bool pass = false;
};

/// Full pipeline: discretize the target at each k, simulate rescaled flows
/// from the rounded staircase ⌊k·Y0⌋/k, estimate Laplace functionals, and
/// compare against the grid-solver predictions with slack C/k on top of the
/// 3-SE statistical band.
inline ConvergenceReport convergence_experiment(
    const MechanismFamily& target, const std::string& family_name,
    const std::vector<int>& k_list, const LevelGrid& grid, const std::vector<double>& y0,
    const std::vector<double>& t_list, const std::vector<ExperimentFSpec>& f_specs,
    std::size_t replicas, std::uint64_t master_seed, double c_slack, std::size_t grid_m = 200,
    const OdeConfig& ode = {}, int workers = 0, const FlowOptions& fopts = {}) {
  if (k_list.empty() || f_specs.empty() || t_list.empty())
    throw std::invalid_argument("convergence_experiment: empty k, t or f list");
  if (y0.size() != grid.size())
    throw std::invalid_argument("convergence_experiment: y0 must match the level grid");
  if (std::abs(grid.top() - 1.0) > 1e-12)
    throw std::invalid_argument("convergence_experiment: top level must be 1");
  double prev = 0.0;
  for (double y : y0) {
    if (y < prev - 1e-12)
      throw std::invalid_argument("convergence_experiment: y0 must be nondecreasing");
    prev = y;
  }
  detail::check_times(t_list, *std::max_element(t_list.begin(), t_list.end()));

  ConvergenceReport report;
  report.family = family_name;
  report.master_seed = master_seed;
  report.c_slack = c_slack;
  report.replicas = replicas;
  report.k_list = k_list;

  // oracle per (t, f): V_t f on the shared grid paired with the target Y0
  std::vector<MassAtom> mu0;
  double acc = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    mu0.push_back({grid.levels[j], y0[j] - acc});
    acc = y0[j];
  }
  const double horizon = *std::max_element(t_list.begin(), t_list.end());
  std::vector<std::vector<double>> oracle(t_list.size(), std::vector<double>(f_specs.size()));
  for (std::size_t fi = 0; fi < f_specs.size(); ++fi) {
    const GridFunction f_grid =
        GridFunction::from_levels(grid_m, grid.levels, f_specs[fi].f_levels);
    for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
      const GridFunction vtf = solve_nonlocal_cumulant(target, f_grid, t_list[ti], ode);
      oracle[ti][fi] = laplace_prediction(mu0, vtf);
    }
  }

  std::vector<double> sigma_b0;
  for (int k : k_list) {
    const BuiltFamily built = build_discrete_family(target, k, family_name);
    sigma_b0.push_back(built.sigma_k * built.family.death_prob(0.0));

    FlowPlan plan{built.family, grid, static_cast<double>(k), {}, horizon,
                  derive_seed(master_seed, static_cast<std::uint64_t>(k)), replicas, k, fopts,
                  family_name};
    plan.x0.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      plan.x0[j] = static_cast<std::int64_t>(std::floor(static_cast<double>(k) * y0[j] + 1e-9));

    const FlowDriver driver(plan.family, plan.grid, plan.kappa, plan.opts);
    auto per_replica = [&](std::size_t r) {
      Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
      SnapshotSink sink(t_list, false);
      simulate_flow_into(driver, plan.x0, plan.horizon, rng, sink, plan.opts);
      std::vector<double> vals(t_list.size() * f_specs.size());
      for (std::size_t ti = 0; ti < t_list.size(); ++ti)
        for (std::size_t fi = 0; fi < f_specs.size(); ++fi)
          vals[ti * f_specs.size() + fi] =
              std::exp(-rescaled_pairing(sink.at(ti), k, f_specs[fi].f_levels));
      return vals;
    };
    const auto results = map_replicas<std::vector<double>>(replicas, workers, per_replica);

    for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
      for (std::size_t fi = 0; fi < f_specs.size(); ++fi) {
        RunningStat stat;
        for (const auto& vals : results) stat.push(vals[ti * f_specs.size() + fi]);
        ConvergenceCell cell;
        cell.k = k;
        cell.sigma_k = built.sigma_k;
        cell.t = t_list[ti];
        cell.f_id = f_specs[fi].id;
        cell.estimate = stat.mean();
        cell.std_error = stat.std_error();
        cell.oracle = oracle[ti][fi];
        cell.gap = std::abs(cell.estimate - cell.oracle);
        cell.z = z_score(cell.estimate, cell.oracle, cell.std_error);
        cell.slack = c_slack / static_cast<double>(k);
        cell.pass = cell.gap <= 3.0 * cell.std_error + cell.slack;
        report.cells.push_back(cell);
        if (cell.std_error > 0.0) {
          ++report.z_cells;
          if (std::abs(cell.z) > 3.0) ++report.big_z_count;
        }
      }
    }
  }

  for (std::size_t i = 0; i + 1 < sigma_b0.size(); ++i)
    if (sigma_b0[i + 1] > sigma_b0[i] * 1.1 + 1e-12) report.sigma_b0_warning = true;

  // k-trend of the gaps for every (f, t > 0) pair
  bool all_pass = true;
  for (const auto& cell : report.cells) all_pass = all_pass && cell.pass;
  for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
    if (t_list[ti] <= 0.0) continue;
    for (std::size_t fi = 0; fi < f_specs.size(); ++fi) {
      ConvergenceTrend trend;
      trend.f_id = f_specs[fi].id;
      trend.t = t_list[ti];
      std::vector<double> ks, ses;
      for (const auto& cell : report.cells) {
        if (cell.t == t_list[ti] && cell.f_id == f_specs[fi].id) {
          trend.gaps.push_back(cell.gap);
          ks.push_back(static_cast<double>(cell.k));
          ses.push_back(cell.std_error);
        }
      }
      for (std::size_t i = 0; i + 1 < trend.gaps.size(); ++i)
        if (trend.gaps[i + 1] > trend.gaps[i] + 2.0 * pooled_se(ses[i], ses[i + 1]))
          trend.nonincreasing = false;
      trend.spearman_rho = ks.size() >= 2 ? spearman(ks, trend.gaps) : 0.0;
      all_pass = all_pass && trend.nonincreasing;
      report.trends.push_back(trend);
    }
  }
  report.pass = all_pass;
  return report;
}

/// Pilot calibration of the prelimit-bias slack: C = max(1, 1.5·max over
/// pilot cells of k·(gap - 3·SE)+). Deterministic given the master seed.
inline double calibrate_slack(const MechanismFamily& target, const std::string& family_name,
                              const std::vector<int>& pilot_k_list, const LevelGrid& grid,
                              const std::vector<double>& y0, const std::vector<double>& t_list,
                              const std::vector<ExperimentFSpec>& f_specs,
                              std::size_t pilot_replicas, std::uint64_t master_seed,
                              std::size_t grid_m = 200, const OdeConfig& ode = {},
                              int workers = 0, const FlowOptions& fopts = {}) {
  const ConvergenceReport pilot =
      convergence_experiment(target, family_name, pilot_k_list, grid, y0, t_list, f_specs,
                             pilot_replicas, master_seed, 0.0, grid_m, ode, workers, fopts);
  double c = 0.0;
  for (const auto& cell : pilot.cells) {
    if (cell.t <= 0.0) continue;
    c = std::max(c, static_cast<double>(cell.k) *
                        std::max(0.0, cell.gap - 3.0 * cell.std_error));
  }
  return std::max(1.0, 1.5 * c);
}

}  // namespace bflow

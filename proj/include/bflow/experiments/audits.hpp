#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bflow/experiments/estimators.hpp"

namespace bflow {

struct MomentRow {
  double t = 0.0;
  std::size_t level = 0;
  double mc_mean = 0.0;
  double se = 0.0;
  double predicted = 0.0;   // X0 · exp(σ(g'(1)-1) t)
  double z = 0.0;
  bool pass_mean = false;   // |mc - predicted| <= 4 SE
  double sup_mean = 0.0;
  double sup_se = 0.0;
  double sup_bound = 0.0;   // X0 · exp(σ g'(1) t)
  bool pass_sup = false;    // sup_mean <= bound + 4 SE (one-sided)
};

struct MomentReport {
  std::vector<MomentRow> rows;
  bool pass = true;
};

namespace detail {

inline MomentRow make_moment_row(double t, std::size_t level, const RunningStat& mean_stat,
                                 const RunningStat& sup_stat, double x0, double sigma,
                                 double offspring_mean) {
  MomentRow row;
  row.t = t;
  row.level = level;
  row.mc_mean = mean_stat.mean();
  row.se = mean_stat.std_error();
  row.predicted = x0 * std::exp(sigma * (offspring_mean - 1.0) * t);
  row.z = z_score(row.mc_mean, row.predicted, row.se);
  row.pass_mean = std::abs(row.mc_mean - row.predicted) <= 4.0 * row.se;
  row.sup_mean = sup_stat.mean();
  row.sup_se = sup_stat.std_error();
  row.sup_bound = x0 * std::exp(sigma * offspring_mean * t);
  row.pass_sup = row.sup_mean <= row.sup_bound + 4.0 * row.sup_se;
  return row;
}

}  // namespace detail

/// Mean identity and sup-moment bound for the single process.
inline MomentReport moment_audit(const SinglePlan& plan, std::span<const double> times,
                                 int workers = 0) {
  if (plan.replicas < 10000) throw std::invalid_argument("moment_audit: need >= 1e4 replicas");
  detail::check_times(times, plan.horizon);
  const DiscreteCdf sampler = plan.law.make_sampler();
  const std::vector<double> ts(times.begin(), times.end());

  struct Obs { std::vector<std::int64_t> x, sup; };
  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, true);
    simulate_single_into(sampler, plan.sigma, plan.x0, plan.horizon, rng, sink, plan.opts);
    Obs obs;
    obs.x.resize(ts.size());
    obs.sup.resize(ts.size());
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      obs.x[ti] = sink.at(ti)[0];
      obs.sup[ti] = sink.sup_at(ti)[0];
    }
    return obs;
  };
  const auto results = map_replicas<Obs>(plan.replicas, workers, per_replica);

  MomentReport report;
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    RunningStat mean_stat, sup_stat;
    for (const auto& obs : results) {
      mean_stat.push(static_cast<double>(obs.x[ti]));
      sup_stat.push(static_cast<double>(obs.sup[ti]));
    }
    report.rows.push_back(detail::make_moment_row(ts[ti], 0, mean_stat, sup_stat,
                                                  static_cast<double>(plan.x0), plan.sigma,
                                                  plan.law.mean()));
    report.pass = report.pass && report.rows.back().pass_mean && report.rows.back().pass_sup;
  }
  return report;
}

/// Per-level audit of the flow: each level is compared against the law it
/// carries after θ-scaling (the kill band cancels the z=0 deficit, leaving
/// net drift σ(g'(1)-1)).
inline MomentReport moment_audit(const FlowPlan& plan, std::span<const double> times,
                                 int workers = 0) {
  if (plan.replicas < 10000) throw std::invalid_argument("moment_audit: need >= 1e4 replicas");
  detail::check_times(times, plan.horizon);
  const FlowDriver driver(plan.family, plan.grid, plan.kappa, plan.opts);
  const std::vector<double> ts(times.begin(), times.end());
  const std::size_t nlev = plan.grid.size();

  struct Obs { std::vector<std::int64_t> x, sup; };  // flattened [t][level]
  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, true);
    simulate_flow_into(driver, plan.x0, plan.horizon, rng, sink, plan.opts);
    Obs obs;
    obs.x.resize(ts.size() * nlev);
    obs.sup.resize(ts.size() * nlev);
    for (std::size_t ti = 0; ti < ts.size(); ++ti)
      for (std::size_t j = 0; j < nlev; ++j) {
        obs.x[ti * nlev + j] = sink.at(ti)[j];
        obs.sup[ti * nlev + j] = sink.sup_at(ti)[j];
      }
    return obs;
  };
  const auto results = map_replicas<Obs>(plan.replicas, workers, per_replica);

  std::vector<double> level_mean(nlev);
  for (std::size_t j = 0; j < nlev; ++j)
    level_mean[j] = plan.family.law_at(plan.kappa * plan.grid.levels[j]).mean();

  MomentReport report;
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    for (std::size_t j = 0; j < nlev; ++j) {
      RunningStat mean_stat, sup_stat;
      for (const auto& obs : results) {
        mean_stat.push(static_cast<double>(obs.x[ti * nlev + j]));
        sup_stat.push(static_cast<double>(obs.sup[ti * nlev + j]));
      }
      report.rows.push_back(detail::make_moment_row(ts[ti], j, mean_stat, sup_stat,
                                                    static_cast<double>(plan.x0[j]),
                                                    plan.family.rate(), level_mean[j]));
      report.pass = report.pass && report.rows.back().pass_mean && report.rows.back().pass_sup;
    }
  }
  return report;
}

struct PgfPoint {
  double s = 0.0;
  double estimate = 0.0;
  double se = 0.0;
};

/// Empirical E[s^{X_t}] at the given s-points, for one level of a flow plan.
inline std::vector<PgfPoint> pgf_estimates(const FlowPlan& plan, std::size_t level, double t,
                                           std::span<const double> s_points, int workers = 0) {
  const std::vector<double> ts{t};
  const FlowDriver driver(plan.family, plan.grid, plan.kappa, plan.opts);
  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, false);
    simulate_flow_into(driver, plan.x0, plan.horizon, rng, sink, plan.opts);
    return sink.at(0)[level];
  };
  const auto xs = map_replicas<std::int64_t>(plan.replicas, workers, per_replica);
  std::vector<PgfPoint> out;
  for (double s : s_points) {
    RunningStat stat;
    for (std::int64_t x : xs) stat.push(std::pow(s, static_cast<double>(x)));
    out.push_back({s, stat.mean(), stat.std_error()});
  }
  return out;
}

/// Same for the single process.
inline std::vector<PgfPoint> pgf_estimates(const SinglePlan& plan, double t,
                                           std::span<const double> s_points, int workers = 0) {
  const std::vector<double> ts{t};
  const DiscreteCdf sampler = plan.law.make_sampler();
  auto per_replica = [&](std::size_t r) {
    Rng rng = SeedSpec{plan.master_seed, r}.make_rng();
    SnapshotSink sink(ts, false);
    simulate_single_into(sampler, plan.sigma, plan.x0, plan.horizon, rng, sink, plan.opts);
    return sink.at(0)[0];
  };
  const auto xs = map_replicas<std::int64_t>(plan.replicas, workers, per_replica);
  std::vector<PgfPoint> out;
  for (double s : s_points) {
    RunningStat stat;
    for (std::int64_t x : xs) stat.push(std::pow(s, static_cast<double>(x)));
    out.push_back({s, stat.mean(), stat.std_error()});
  }
  return out;
}

struct PgfCompareRow {
  double s = 0.0;
  double a = 0.0, a_se = 0.0;
  double b = 0.0, b_se = 0.0;  // after raising to power_b, delta-method SE
  double gap = 0.0;
  double pooled = 0.0;
  bool pass = false;  // gap <= 4 pooled SE
};

struct PgfCompareReport {
  std::vector<PgfCompareRow> rows;
  bool pass = true;
};

/// Compares population A against population B raised to power_b (the
/// branching-property test uses power 2 on the unit initial state).
inline PgfCompareReport compare_pgfs(const std::vector<PgfPoint>& a,
                                     const std::vector<PgfPoint>& b, double power_b = 1.0) {
  if (a.size() != b.size()) throw std::invalid_argument("compare_pgfs: size mismatch");
  PgfCompareReport report;
  for (std::size_t i = 0; i < a.size(); ++i) {
    PgfCompareRow row;
    row.s = a[i].s;
    row.a = a[i].estimate;
    row.a_se = a[i].se;
    row.b = std::pow(b[i].estimate, power_b);
    row.b_se = power_b == 1.0
                   ? b[i].se
                   : std::abs(power_b * std::pow(b[i].estimate, power_b - 1.0)) * b[i].se;
    row.gap = std::abs(row.a - row.b);
    row.pooled = pooled_se(row.a_se, row.b_se);
    row.pass = row.gap <= 4.0 * row.pooled;
    report.rows.push_back(row);
    report.pass = report.pass && row.pass;
  }
  return report;
}

}  // namespace bflow

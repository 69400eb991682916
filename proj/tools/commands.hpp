#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "bflow/cli/config.hpp"
#include "bflow/cumulant/solvers.hpp"
#include "bflow/experiments/audits.hpp"
#include "bflow/experiments/convergence.hpp"
#include "bflow/experiments/martingale.hpp"
#include "bflow/experiments/report.hpp"
#include "bflow/flowsim/path_io.hpp"
#include "bflow/mechanisms/recipe.hpp"

namespace bflow::cli {

namespace fs = std::filesystem;

inline fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  return dir;
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw config_error("config: " + what);
}

/// Discretizes the family at every k and audits the uniform convergence of
/// the rescaled mechanisms.
inline int cmd_mech(const ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.has_family, "[family] section is required for mech");
  require(!cfg.k_list.empty(), "[experiment] k_list is required for mech");
  const MechanismFamily target = make_family(cfg.family);
  MechanismConvergenceReport rep;
  try {
    rep = check_mechanism_convergence(target, cfg.k_list, cfg.mech_l, cfg.mech_grid);
  } catch (const admissibility_error& e) {
    log << "admissibility failure: " << e.what() << " (coefficient " << e.index << " = "
        << e.coefficient << ")\n";
    return 2;
  }
  const fs::path out = ensure_out_dir(cfg) / "mech_report.json";
  write_text_file(out, to_json(rep, cfg.hash()).dump(2) + "\n");
  for (const auto& row : rep.rows)
    log << "k=" << row.k << " sigma_k=" << row.sigma_k << " sup_error=" << row.sup_error
        << " lipschitz=" << row.lipschitz << " sigma_b0=" << row.sigma_b0 << "\n";
  for (double r : rep.doubling_ratios) log << "doubling ratio " << r << "\n";
  if (rep.sigma_b0_warning)
    log << "warning: sigma_k * p0(0) grows with k (kill intensity unbounded in k)\n";
  log << (rep.pass ? "mech: PASS" : "mech: FAIL") << " -> " << out.string() << "\n";
  return rep.pass ? 0 : 1;
}

/// Deterministic oracle tables: scalar cumulant rows per λ and grid-solver
/// rows per configured f, with the Laplace predictions for the configured
/// initial staircase.
inline int cmd_ode(const ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.has_family, "[family] section is required for ode");
  const MechanismFamily target = make_family(cfg.family);
  const double y0_top = cfg.y0.empty() ? 1.0 : cfg.y0.back();

  std::ostringstream csv;
  csv << "# config " << cfg.hash() << "\n";
  csv << "t,id,value,prediction\n";
  for (double t : cfg.t_list) {
    for (double lambda : cfg.lambdas) {
      const double v = solve_cumulant(target.base(), lambda, t, cfg.ode);
      csv << detail::num(t) << ",lambda=" << detail::num(lambda) << ',' << detail::num(v) << ','
          << detail::num(std::exp(-y0_top * v)) << "\n";
    }
  }
  if (!cfg.fs.empty()) {
    require(!cfg.levels.empty() && cfg.y0.size() == cfg.levels.size(),
            "[experiment] levels and y0 are required for f-spec oracle rows");
    std::vector<MassAtom> mu0;
    double acc = 0.0;
    for (std::size_t j = 0; j < cfg.levels.size(); ++j) {
      mu0.push_back({cfg.levels[j], cfg.y0[j] - acc});
      acc = cfg.y0[j];
    }
    for (const auto& spec : resolve_f_specs(cfg)) {
      const GridFunction f_grid = GridFunction::from_levels(cfg.grid_m, cfg.levels, spec.f_levels);
      for (double t : cfg.t_list) {
        const GridFunction vtf = solve_nonlocal_cumulant(target, f_grid, t, cfg.ode);
        double pairing = 0.0;
        for (const auto& a : mu0) pairing += a.mass * vtf[vtf.node_index(a.location)];
        csv << detail::num(t) << ',' << spec.id << ',' << detail::num(pairing) << ','
            << detail::num(std::exp(-pairing)) << "\n";
      }
    }
  }
  const fs::path out = ensure_out_dir(cfg) / "oracle_table.csv";
  write_text_file(out, csv.str());
  log << "ode: wrote " << out.string() << "\n";
  return 0;
}

/// Single-process Monte Carlo: moment audit, branching-property test,
/// extinction summary against the generating-function flow.
inline int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  require(!cfg.law_probs.empty(), "[law] probs are required for simulate");
  const OffspringLaw law(cfg.law_probs);
  const double horizon = *std::max_element(cfg.t_list.begin(), cfg.t_list.end());
  SinglePlan plan{law, cfg.law_sigma, cfg.law_x0, horizon,
                  derive_seed(cfg.master_seed, 1), cfg.replicas, 1,
                  SimOptions{cfg.event_cap, false}};

  const auto moments = moment_audit(plan, cfg.t_list, cfg.workers);

  SinglePlan unit = plan;
  unit.x0 = 1;
  unit.master_seed = derive_seed(cfg.master_seed, 2);
  const auto branching =
      compare_pgfs(pgf_estimates(plan, horizon, cfg.s_points, cfg.workers),
                   pgf_estimates(unit, horizon, cfg.s_points, cfg.workers),
                   static_cast<double>(plan.x0));

  // extinction frequency vs the ODE oracle
  RunningStat ext;
  {
    const DiscreteCdf sampler = law.make_sampler();
    const std::vector<double> ts{horizon};
    auto per_replica = [&](std::size_t r) {
      Rng rng = SeedSpec{derive_seed(cfg.master_seed, 3), r}.make_rng();
      SnapshotSink sink(ts, false);
      simulate_single_into(sampler, plan.sigma, plan.x0, horizon, rng, sink, plan.opts);
      return sink.at(0)[0] == 0 ? 1.0 : 0.0;
    };
    for (double v : map_replicas<double>(cfg.replicas, cfg.workers, per_replica)) ext.push(v);
  }
  const double ext_oracle =
      std::pow(solve_pgf_ode(law, plan.sigma, horizon, 0.0, cfg.ode),
               static_cast<double>(plan.x0));
  const bool ext_pass = std::abs(ext.mean() - ext_oracle) <= 4.0 * ext.std_error() + 1e-12;

  if (cfg.dump_paths > 0) {
    const fs::path dir = ensure_out_dir(cfg) / "paths";
    fs::create_directories(dir);
    for (std::size_t r = 0; r < cfg.dump_paths; ++r) {
      const FlowPath p = simulate_single(law, plan.sigma, plan.x0, horizon,
                                         {derive_seed(cfg.master_seed, 1), r}, plan.opts);
      std::ofstream os(dir / ("single_" + std::to_string(r) + ".txt"), std::ios::binary);
      write_path(os, p);
    }
  }

  json out;
  out["report"] = "simulate";
  out["config_hash"] = cfg.hash();
  out["master_seed"] = cfg.master_seed;
  out["moments"] = to_json(moments, cfg.hash());
  out["branching"] = to_json(branching, cfg.hash());
  out["extinction"] = {{"t", horizon},
                       {"estimate", ext.mean()},
                       {"se", ext.std_error()},
                       {"oracle", ext_oracle},
                       {"pass", ext_pass}};
  const bool pass = moments.pass && branching.pass && ext_pass;
  out["pass"] = pass;
  const fs::path path = ensure_out_dir(cfg) / "simulate_report.json";
  write_text_file(path, out.dump(2) + "\n");
  log << "simulate: moments " << (moments.pass ? "PASS" : "FAIL") << ", branching "
      << (branching.pass ? "PASS" : "FAIL") << ", extinction " << (ext_pass ? "PASS" : "FAIL")
      << " -> " << path.string() << "\n";
  return pass ? 0 : 1;
}

/// Coupled-flow Monte Carlo: per-level moment audit, marginal-coupling test
/// against the single process, ordering validation on every event.
inline int cmd_flow(const ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.has_family, "[family] section is required for flow");
  require(cfg.flow_k >= 1, "[flow] k >= 1 is required for flow");
  require(!cfg.levels.empty(), "[experiment] levels are required for flow");
  const MechanismFamily target = make_family(cfg.family);
  const BuiltFamily built = build_discrete_family(target, cfg.flow_k, cfg.family.name);
  const LevelGrid grid(cfg.levels);

  std::vector<std::int64_t> x0 = cfg.flow_x0;
  if (x0.empty()) {
    require(cfg.y0.size() == cfg.levels.size(), "[experiment] y0 or [flow] x0 is required");
    for (double y : cfg.y0)
      x0.push_back(static_cast<std::int64_t>(std::floor(cfg.flow_k * y + 1e-9)));
  }
  require(x0.size() == cfg.levels.size(), "[flow] x0 must match the levels");

  const double horizon = *std::max_element(cfg.t_list.begin(), cfg.t_list.end());
  FlowOptions fopts{cfg.event_cap, true, cfg.sampler_cells};
  FlowPlan plan{built.family, grid, static_cast<double>(cfg.flow_k), x0, horizon,
                derive_seed(cfg.master_seed, 11), cfg.replicas, cfg.flow_k, fopts,
                cfg.family.name};

  const auto moments = moment_audit(plan, cfg.t_list, cfg.workers);

  require(cfg.marginal_level < grid.size(), "[flow] marginal_level out of range");
  const std::size_t ml = cfg.marginal_level;
  SinglePlan single{built.family.law_at(plan.kappa * grid.levels[ml]), built.sigma_k, x0[ml],
                    horizon, derive_seed(cfg.master_seed, 12), cfg.replicas, 1,
                    SimOptions{cfg.event_cap, false}};
  const auto marginal = compare_pgfs(pgf_estimates(plan, ml, horizon, cfg.s_points, cfg.workers),
                                     pgf_estimates(single, horizon, cfg.s_points, cfg.workers));

  if (cfg.dump_paths > 0) {
    const fs::path dir = ensure_out_dir(cfg) / "paths";
    fs::create_directories(dir);
    for (std::size_t r = 0; r < cfg.dump_paths; ++r) {
      const FlowPath p = simulate_flow(built.family, grid, plan.kappa, x0, horizon,
                                       {plan.master_seed, r}, fopts, cfg.family.name, cfg.flow_k);
      std::ofstream os(dir / ("flow_" + std::to_string(r) + ".txt"), std::ios::binary);
      write_path(os, p);
    }
  }

  json out;
  out["report"] = "flow";
  out["config_hash"] = cfg.hash();
  out["master_seed"] = cfg.master_seed;
  out["k"] = cfg.flow_k;
  out["sigma_k"] = built.sigma_k;
  out["ordering_validated"] = true;  // simulate_flow_into throws on violation
  out["moments"] = to_json(moments, cfg.hash());
  out["marginal"] = to_json(marginal, cfg.hash());
  const bool pass = moments.pass && marginal.pass;
  out["pass"] = pass;
  const fs::path path = ensure_out_dir(cfg) / "flow_report.json";
  write_text_file(path, out.dump(2) + "\n");
  log << "flow: moments " << (moments.pass ? "PASS" : "FAIL") << ", marginal "
      << (marginal.pass ? "PASS" : "FAIL") << " -> " << path.string() << "\n";
  return pass ? 0 : 1;
}

/// Full pipeline: build → simulate → estimate → compare against the
/// grid-solver oracle; exit code reflects the overall verdict.
inline int cmd_converge(const ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.has_family, "[family] section is required for converge");
  require(!cfg.k_list.empty(), "[experiment] k_list is required for converge");
  require(!cfg.levels.empty() && cfg.y0.size() == cfg.levels.size(),
          "[experiment] levels and y0 are required for converge");
  require(!cfg.fs.empty(), "at least one [f] section is required for converge");
  const MechanismFamily target = make_family(cfg.family);
  const LevelGrid grid(cfg.levels);
  const auto f_specs = resolve_f_specs(cfg);
  const FlowOptions fopts{cfg.event_cap, false, cfg.sampler_cells};

  double c_slack = cfg.slack_c;
  if (cfg.slack_auto) {
    require(!cfg.pilot_k.empty(), "[experiment] pilot_k is required with slack_c = auto");
    c_slack = calibrate_slack(target, cfg.family.name, cfg.pilot_k, grid, cfg.y0, cfg.t_list,
                              f_specs, cfg.pilot_replicas, derive_seed(cfg.master_seed, 21),
                              cfg.grid_m, cfg.ode, cfg.workers, fopts);
    log << "pilot slack constant: " << c_slack << "\n";
  }

  ConvergenceReport rep =
      convergence_experiment(target, cfg.family.name, cfg.k_list, grid, cfg.y0, cfg.t_list,
                             f_specs, cfg.replicas, cfg.master_seed, c_slack, cfg.grid_m,
                             cfg.ode, cfg.workers, fopts);
  rep.config_hash = cfg.hash();

  const fs::path dir = ensure_out_dir(cfg);
  write_text_file(dir / "convergence.json", to_json(rep).dump(2) + "\n");
  std::ostringstream csv;
  write_convergence_csv(csv, rep);
  write_text_file(dir / "convergence.csv", csv.str());
  write_convergence_text(log, rep);
  log << "converge -> " << (dir / "convergence.json").string() << "\n";
  return rep.pass ? 0 : 1;
}

/// Re-checks recorded paths: replay, level ordering, time ordering.
inline int cmd_verify(const std::vector<std::string>& files, std::ostream& log) {
  if (files.empty()) {
    log << "verify: no path files given\n";
    return 2;
  }
  bool all_ok = true;
  for (const auto& file : files) {
    std::ifstream is(file);
    if (!is) {
      log << file << ": FAIL (cannot open)\n";
      all_ok = false;
      continue;
    }
    try {
      const FlowPath path = read_path(is);
      const auto rep = verify_path(path);
      if (rep.ok()) {
        log << file << ": PASS (" << path.events.size() << " events)\n";
      } else {
        log << file << ": FAIL (" << (rep.replay_ok ? "" : "replay ")
            << (rep.monotone_ok ? "" : "ordering ") << (rep.times_ok ? "" : "times ")
            << "check failed)\n";
        all_ok = false;
      }
    } catch (const std::exception& e) {
      log << file << ": FAIL (" << e.what() << ")\n";
      all_ok = false;
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace bflow::cli

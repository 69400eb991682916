#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bflow/experiments/audits.hpp"
#include "bflow/experiments/convergence.hpp"
#include "bflow/experiments/martingale.hpp"
#include "bflow/mechanisms/recipe.hpp"

namespace bflow {

using json = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline json to_json(const MechanismConvergenceReport& rep, std::uint64_t config_hash) {
  json out;
  out["report"] = "mechanism-convergence";
  out["config_hash"] = config_hash;
  out["pass"] = rep.pass;
  out["errors_nonincreasing"] = rep.errors_nonincreasing;
  out["ratios_in_band"] = rep.ratios_in_band;
  out["sigma_b0_warning"] = rep.sigma_b0_warning;
  out["doubling_ratios"] = rep.doubling_ratios;
  out["rows"] = json::array();
  for (const auto& row : rep.rows) {
    out["rows"].push_back({{"k", row.k},
                           {"sigma_k", row.sigma_k},
                           {"sup_error", row.sup_error},
                           {"lipschitz", row.lipschitz},
                           {"sigma_b0", row.sigma_b0}});
  }
  return out;
}

inline json to_json(const MomentReport& rep, std::uint64_t config_hash) {
  json out;
  out["report"] = "moment-audit";
  out["config_hash"] = config_hash;
  out["pass"] = rep.pass;
  out["rows"] = json::array();
  for (const auto& r : rep.rows) {
    out["rows"].push_back({{"t", r.t},
                           {"level", r.level},
                           {"mc_mean", r.mc_mean},
                           {"se", r.se},
                           {"predicted", r.predicted},
                           {"z", r.z},
                           {"pass_mean", r.pass_mean},
                           {"sup_mean", r.sup_mean},
                           {"sup_se", r.sup_se},
                           {"sup_bound", r.sup_bound},
                           {"pass_sup", r.pass_sup}});
  }
  return out;
}

inline json to_json(const PgfCompareReport& rep, std::uint64_t config_hash) {
  json out;
  out["report"] = "pgf-compare";
  out["config_hash"] = config_hash;
  out["pass"] = rep.pass;
  out["rows"] = json::array();
  for (const auto& r : rep.rows) {
    out["rows"].push_back({{"s", r.s},
                           {"a", r.a},
                           {"a_se", r.a_se},
                           {"b", r.b},
                           {"b_se", r.b_se},
                           {"gap", r.gap},
                           {"pooled_se", r.pooled},
                           {"pass", r.pass}});
  }
  return out;
}

inline json to_json(const MartingaleReport& rep, std::uint64_t config_hash) {
  json out;
  out["report"] = "martingale-residual";
  out["config_hash"] = config_hash;
  out["rows"] = json::array();
  for (const auto& r : rep.rows) {
    out["rows"].push_back(
        {{"t", r.t}, {"residual", r.residual}, {"ci_half", r.ci_half}, {"replicas", r.replicas}});
  }
  return out;
}

inline json to_json(const ConvergenceReport& rep) {
  json out;
  out["report"] = "convergence";
  out["family"] = rep.family;
  out["config_hash"] = rep.config_hash;
  out["master_seed"] = rep.master_seed;
  out["replicas"] = rep.replicas;
  out["c_slack"] = rep.c_slack;
  out["k_list"] = rep.k_list;
  out["pass"] = rep.pass;
  out["sigma_b0_warning"] = rep.sigma_b0_warning;
  out["z_calibration"] = {{"cells", rep.z_cells}, {"abs_z_above_3", rep.big_z_count}};
  out["cells"] = json::array();
  for (const auto& c : rep.cells) {
    out["cells"].push_back({{"k", c.k},
                            {"sigma_k", c.sigma_k},
                            {"t", c.t},
                            {"f", c.f_id},
                            {"estimate", c.estimate},
                            {"se", c.std_error},
                            {"oracle", c.oracle},
                            {"gap", c.gap},
                            {"z", c.z},
                            {"slack", c.slack},
                            {"pass", c.pass}});
  }
  out["trends"] = json::array();
  for (const auto& tr : rep.trends) {
    out["trends"].push_back({{"f", tr.f_id},
                             {"t", tr.t},
                             {"gaps", tr.gaps},
                             {"spearman", tr.spearman_rho},
                             {"nonincreasing", tr.nonincreasing}});
  }
  return out;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
  os << "family,k,t,f,estimate,se,oracle,gap,z,slack,pass\n";
  for (const auto& c : rep.cells) {
    os << rep.family << ',' << c.k << ',' << detail::num(c.t) << ',' << c.f_id << ','
       << detail::num(c.estimate) << ',' << detail::num(c.std_error) << ','
       << detail::num(c.oracle) << ',' << detail::num(c.gap) << ',' << detail::num(c.z) << ','
       << detail::num(c.slack) << ',' << (c.pass ? 1 : 0) << "\n";
  }
}

inline void write_convergence_text(std::ostream& os, const ConvergenceReport& rep) {
  char line[256];
  os << "convergence report: family=" << rep.family << " replicas=" << rep.replicas
     << " c_slack=" << rep.c_slack << " seed=" << rep.master_seed << "\n";
  std::snprintf(line, sizeof line, "%6s %8s %6s %-12s %12s %12s %12s %10s %8s %6s\n", "k",
                "sigma_k", "t", "f", "estimate", "oracle", "gap", "3se+slack", "z", "pass");
  os << line;
  for (const auto& c : rep.cells) {
    std::snprintf(line, sizeof line,
                  "%6d %8.2f %6.3g %-12s %12.6g %12.6g %12.4g %10.4g %8.2f %6s\n", c.k,
                  c.sigma_k, c.t, c.f_id.c_str(), c.estimate, c.oracle, c.gap,
                  3.0 * c.std_error + c.slack, c.z, c.pass ? "PASS" : "FAIL");
    os << line;
  }
  for (const auto& tr : rep.trends) {
    os << "trend f=" << tr.f_id << " t=" << tr.t
       << " spearman=" << detail::num(tr.spearman_rho)
       << (tr.nonincreasing ? " nonincreasing" : " INCREASING") << "\n";
  }
  if (rep.sigma_b0_warning)
    os << "warning: sigma_k * p0(0) grows with k (kill intensity is unbounded in k)\n";
  os << (rep.pass ? "OVERALL PASS" : "OVERALL FAIL") << "\n";
}

}  // namespace bflow

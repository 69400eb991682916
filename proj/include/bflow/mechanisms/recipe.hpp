#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bflow/mechanisms/discrete_family.hpp"
#include "bflow/mechanisms/mechanism.hpp"

namespace bflow {

struct admissibility_error : std::runtime_error {
  admissibility_error(const std::string& msg, std::size_t index, double coefficient)
      : std::runtime_error(msg), index(index), coefficient(coefficient) {}
  std::size_t index = 0;
  double coefficient = 0.0;
};

namespace detail {

/// Power-series coefficients of target_value(θ', k(1-s)) in s, for the
/// catalog parametric forms. Every component has an elementary expansion:
/// geometric for the exponential jump pieces, Poisson-weights for atoms.
/// Iteration stops once the mass left above the top retained index is below
/// `tail_tol` in the g-normalized scale (the full series sums to 0, so the
/// normalized coefficients sum to exactly 1) and the mean carried by that
/// tail is below 5e-11, which keeps the g'(1) bias of the fold under 1e-10.
inline std::vector<double> mechanism_series(const MechanismFamily& target, int k,
                                            double theta_prime, double k_sigma,
                                            double tail_tol = 1e-12) {
  const double kd = static_cast<double>(k);
  const Mechanism& base = target.base();
  const double h_int = target.h_integral(theta_prime);
  const double g_int = target.gamma_integral(theta_prime);
  const double beff = base.drift() - h_int;
  const double quad = 0.5 * base.diffusion() * kd * kd;
  const double rho = target.rho();
  const double rho_m = base.jump_decay();
  const double amp_m = base.jump_amp();

  // geometric components: value * ratio^i at index i
  struct Geo { double value; double ratio; };
  std::vector<Geo> geos;
  if (amp_m > 0.0) geos.push_back({amp_m * rho_m / (rho_m + kd), kd / (rho_m + kd)});
  if (g_int > 0.0) geos.push_back({g_int * rho / (rho + kd), kd / (rho + kd)});
  // Poisson components, tracked in log space so large k·u atoms whose early
  // terms underflow still contribute their bulk mass
  struct Pois { double log_term; double log_mean; double weight; };
  std::vector<Pois> poissons;
  for (const auto& a : base.atoms())
    if (a.weight > 0.0)
      poissons.push_back({std::log(a.weight) - kd * a.size, std::log(kd * a.size), a.weight});

  // index scale of the remaining tail: geometric tails extend ~1/(1-ratio)
  // past the current index, Poisson tails ~k·u
  double tail_scale = 1.0;
  for (const auto& g : geos) tail_scale = std::max(tail_scale, 1.0 / (1.0 - g.ratio));
  for (const auto& p : poissons) tail_scale = std::max(tail_scale, std::exp(p.log_mean));

  std::vector<double> coeffs;
  coeffs.reserve(64);
  const std::size_t hard_cap = std::size_t{1} << 22;
  for (std::size_t i = 0; i < hard_cap; ++i) {
    double c = 0.0;
    for (auto& g : geos) { c += g.value; g.value *= g.ratio; }
    for (auto& p : poissons) {
      if (p.log_term > -745.0) c += std::exp(p.log_term);
      p.log_term += p.log_mean - std::log(static_cast<double>(i + 1));
    }
    if (i == 0) {
      c += beff * kd + quad - g_int;
      if (amp_m > 0.0) c += amp_m * (kd / rho_m - 1.0);
      for (const auto& a : base.atoms()) c += a.weight * (kd * a.size - 1.0);
    } else if (i == 1) {
      c += -beff * kd - 2.0 * quad;
      if (amp_m > 0.0) c -= amp_m * kd / rho_m;
      for (const auto& a : base.atoms()) c -= a.weight * kd * a.size;
    } else if (i == 2) {
      c += quad;
    }
    double p = c / k_sigma;
    if (i == 1) p += 1.0;
    coeffs.push_back(p);
    // remaining mass past index i, from the component closed forms (no
    // catastrophic cancellation against the running sum)
    double remaining = 0.0;
    for (const auto& g : geos) remaining += g.value / (1.0 - g.ratio);
    for (const auto& p2 : poissons) {
      if (static_cast<double>(i + 2) > 2.0 * std::exp(p2.log_mean))
        remaining += 2.0 * (p2.log_term > -745.0 ? std::exp(p2.log_term) : 0.0);
      else
        remaining += p2.weight;
    }
    remaining /= k_sigma;
    if (i >= 2 && remaining <= tail_tol &&
        remaining * (static_cast<double>(i) + tail_scale) <= 5e-11)
      return coeffs;
  }
  throw std::runtime_error("mechanism_series: series did not reach the tail tolerance");
}

/// Fold the exact remainder into the largest retained atom so the law sums
/// to 1; clamp fp-noise negatives (|x| <= 1e-12).
inline void fold_tail(std::vector<double>& p) {
  double sum = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) {
      if (p[i] < -1e-12) throw admissibility_error("fold_tail: negative coefficient", i, p[i]);
      p[i] = 0.0;
    }
    sum += p[i];
    if (p[i] > p[largest]) largest = i;
  }
  p[largest] += 1.0 - sum;
}

}  // namespace detail

/// Output of the family discretization.
struct BuiltFamily {
  DiscreteFlowFamily family;
  double sigma_k = 0.0;
  int k = 0;
  double max_mean_bias = 0.0;  // |g'(1) after folding - closed form| over probe θ
  std::string label;
};

/// kσ_k [g_{kθ}(e^{-z/k}) - e^{-z/k}] — the mechanism induced by a discrete
/// family after space/time/rate rescaling by k.
inline double discrete_mechanism(int k, double sigma_k, const DiscreteFlowFamily& fam,
                                 double theta, double z) {
  if (z < 0.0) throw std::domain_error("discrete_mechanism: z must be >= 0");
  const double kd = static_cast<double>(k);
  if (kd * theta > fam.theta_max() * (1.0 + 1e-12))
    throw std::domain_error("discrete_mechanism: k*theta exceeds theta_max");
  const double s = std::exp(-z / kd);
  return kd * sigma_k * (fam.law_at(kd * theta).pgf(s) - s);
}

/// Discretize a continuum family at scale k:
///   g_θ(s) = s + value(θ/k, k(1-s)) / (kσ_k),
/// σ_k the smallest member of {c·k + b0⁺ + γ(1)/ρ + j : j = 0,1,...} making
/// every power-series coefficient nonnegative. With this choice the induced
/// discrete_mechanism equals value(θ, k(1-e^{-z/k})) identically, so the
/// rescaled mechanisms converge to the target uniformly on compacts.
inline BuiltFamily build_discrete_family(const MechanismFamily& target, int k,
                                         std::string label = "custom") {
  if (k < 1) throw std::invalid_argument("build_discrete_family: k must be >= 1");
  const double kd = static_cast<double>(k);

  // Coefficient signs other than index 1 do not depend on σ_k; index 1 fixes
  // the minimal rate. Probe θ' on a small grid (the catalog dependence is
  // monotone, endpoints dominate).
  const double start = target.base().diffusion() * kd + std::max(target.base().drift(), 0.0) +
                       target.gamma_integral(1.0) / target.rho();
  double needed_sigma = 0.0;
  for (int p = 0; p <= 10; ++p) {
    const double tp = p / 10.0;
    const auto raw = detail::mechanism_series(target, k, tp, /*k_sigma=*/kd, 1e-13);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      // undo the normalization used for the probe: c_i = raw_i*kd (raw_1 had +1)
      const double c = (i == 1) ? (raw[i] - 1.0) * kd : raw[i] * kd;
      if (i == 1) {
        if (c < 0.0) needed_sigma = std::max(needed_sigma, -c / kd);
      } else if (c < -1e-9 * (1.0 + std::abs(start) * kd)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "build_discrete_family: coefficient %zu is %.3e at theta'=%.2f; "
                      "no rate choice can make it nonnegative",
                      i, c, tp);
        throw admissibility_error(msg, i, c);
      }
    }
  }
  double j0 = std::ceil(needed_sigma - start);
  if (j0 < 0.0) j0 = 0.0;
  double sigma_k = start + j0;
  while (sigma_k <= 0.0) sigma_k += 1.0;
  if (sigma_k > 1e6 * kd) {
    throw admissibility_error("build_discrete_family: no admissible rate below 1e6*k", 1,
                              -needed_sigma * kd);
  }

  MechanismFamily target_copy = target;
  const double k_sigma = kd * sigma_k;
  auto law_at = [target_copy, k, k_sigma](double theta) {
    auto p = detail::mechanism_series(target_copy, k, theta / static_cast<double>(k), k_sigma);
    detail::fold_tail(p);
    return OffspringLaw(std::move(p));
  };

  BuiltFamily out{DiscreteFlowFamily(sigma_k, kd, law_at), sigma_k, k, 0.0, std::move(label)};
  for (int p = 0; p <= 2; ++p) {
    const double tp = p / 2.0;
    const double mean = out.family.law_at(tp * kd).mean();
    const double exact = 1.0 - target.drift_at(tp) / sigma_k;
    out.max_mean_bias = std::max(out.max_mean_bias, std::abs(mean - exact));
  }
  return out;
}

struct MechanismConvergenceRow {
  int k = 0;
  double sigma_k = 0.0;
  double sup_error = 0.0;   // sup |discrete_mechanism - target| on [0,1]x[0,l]
  double lipschitz = 0.0;   // empirical z-Lipschitz constant of the rescaled mechanism
  double sigma_b0 = 0.0;    // σ_k * p_0(0), reported for the warning row
};

struct MechanismConvergenceReport {
  std::vector<MechanismConvergenceRow> rows;
  std::vector<double> doubling_ratios;  // sup_error(k)/sup_error(2k) for doubled neighbors
  bool errors_nonincreasing = true;
  bool ratios_in_band = true;           // every doubling ratio in [1.5, 2.5]
  bool pass = false;
  bool sigma_b0_warning = false;        // σ_k b_k(0) increasing across k (report-only)
};

/// Grid audit of the uniform-on-compacts convergence of the rescaled discrete
/// mechanisms to an admissible target, on [0,1] x [0,l].
inline MechanismConvergenceReport check_mechanism_convergence(const MechanismFamily& target,
                                                              const std::vector<int>& k_list,
                                                              double l, int n_grid = 101) {
  if (k_list.empty()) throw std::invalid_argument("check_mechanism_convergence: empty k list");
  if (l <= 0.0 || n_grid < 2) throw std::invalid_argument("check_mechanism_convergence: bad grid");
  MechanismConvergenceReport rep;
  for (int k : k_list) {
    BuiltFamily built = build_discrete_family(target, k);
    MechanismConvergenceRow row;
    row.k = k;
    row.sigma_k = built.sigma_k;
    row.sigma_b0 = built.sigma_k * built.family.death_prob(0.0);
    const double kd = static_cast<double>(k);
    const double dz = l / static_cast<double>(n_grid - 1);
    for (int ti = 0; ti < n_grid; ++ti) {
      const double theta = ti / static_cast<double>(n_grid - 1);
      const OffspringLaw law = built.family.law_at(kd * theta);
      double prev = 0.0;
      for (int zi = 0; zi < n_grid; ++zi) {
        const double z = zi * dz;
        const double s = std::exp(-z / kd);
        const double v = kd * built.sigma_k * (law.pgf(s) - s);
        row.sup_error = std::max(row.sup_error, std::abs(v - target.value(theta, z)));
        if (zi > 0) row.lipschitz = std::max(row.lipschitz, std::abs(v - prev) / dz);
        prev = v;
      }
    }
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    if (rep.rows[i + 1].sup_error > rep.rows[i].sup_error * (1.0 + 1e-12))
      rep.errors_nonincreasing = false;
    if (rep.rows[i + 1].k == 2 * rep.rows[i].k) {
      const double ratio = rep.rows[i].sup_error /
                           std::max(rep.rows[i + 1].sup_error, 1e-300);
      rep.doubling_ratios.push_back(ratio);
      if (ratio < 1.5 || ratio > 2.5) rep.ratios_in_band = false;
    }
    if (rep.rows[i + 1].sigma_b0 > rep.rows[i].sigma_b0 * 1.1 + 1e-12)
      rep.sigma_b0_warning = true;
  }
  rep.pass = rep.errors_nonincreasing && rep.ratios_in_band;
  return rep;
}

}  // namespace bflow

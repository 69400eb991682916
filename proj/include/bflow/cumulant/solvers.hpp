#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bflow/grid.hpp"
#include "bflow/mechanisms/mechanism.hpp"
#include "bflow/mechanisms/offspring_law.hpp"

namespace bflow {

struct blowup_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed-step RK4. Fixed rather than adaptive so oracle tables are
/// reproducible byte-for-byte across runs and platforms.
struct OdeConfig {
  double step = 1e-3;
  double max_time = 100.0;
};

struct SolverDiag {
  double max_clamp = 0.0;   // largest magnitude clamped to the admissible range
  bool clamp_warning() const { return max_clamp > 1e-9; }
};

namespace detail {

template <class Deriv>
double rk4_scalar(double y0, double t, const OdeConfig& cfg, Deriv&& deriv,
                  double lo, double hi, SolverDiag* diag) {
  if (t < 0.0) throw std::domain_error("rk4: negative time");
  if (cfg.step <= 0.0 || cfg.step > cfg.max_time)
    throw std::invalid_argument("rk4: need 0 < step <= max_time");
  if (t > cfg.max_time) throw std::invalid_argument("rk4: time beyond max_time");
  double y = y0;
  double remaining = t;
  while (remaining > 0.0) {
    const double h = std::min(cfg.step, remaining);
    const double k1 = deriv(y);
    const double k2 = deriv(y + 0.5 * h * k1);
    const double k3 = deriv(y + 0.5 * h * k2);
    const double k4 = deriv(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!(std::abs(y) <= 1e12)) throw blowup_error("rk4: solution exceeded 1e12");
    if (y < lo) {
      if (diag) diag->max_clamp = std::max(diag->max_clamp, lo - y);
      y = lo;
    } else if (y > hi) {
      if (diag) diag->max_clamp = std::max(diag->max_clamp, y - hi);
      y = hi;
    }
    remaining -= h;
  }
  return y;
}

}  // namespace detail

/// F_t(s0) with F' = σ(g(F) - F), F_0 = s0 — the marginal generating
/// function of the single branching process, E[s0^{X_t}] = F_t(s0)^{X_0}.
inline double solve_pgf_ode(const OffspringLaw& law, double sigma, double t, double s0,
                            const OdeConfig& cfg = {}, SolverDiag* diag = nullptr) {
  if (s0 < 0.0 || s0 > 1.0) throw std::domain_error("solve_pgf_ode: s0 outside [0,1]");
  if (sigma <= 0.0) throw std::invalid_argument("solve_pgf_ode: sigma must be > 0");
  return detail::rk4_scalar(s0, t, cfg,
                            [&](double f) {
                              const double fc = std::clamp(f, 0.0, 1.0);
                              return sigma * (law.pgf(fc) - fc);
                            },
                            0.0, 1.0, diag);
}

/// v_t(λ) with v' = -φ(v), v_0 = λ; E e^{-λ Y_t} = e^{-y0 v_t(λ)} for the
/// continuous-state process with mechanism φ.
inline double solve_cumulant(const Mechanism& mech, double lambda, double t,
                             const OdeConfig& cfg = {}, SolverDiag* diag = nullptr) {
  if (lambda < 0.0) throw std::domain_error("solve_cumulant: lambda must be >= 0");
  return detail::rk4_scalar(lambda, t, cfg,
                            [&](double v) { return -mech.value(std::max(v, 0.0)); },
                            0.0, 1e12, diag);
}

/// Same at a fixed θ-slice of a family.
inline double solve_cumulant(const MechanismFamily& family, double theta, double lambda,
                             double t, const OdeConfig& cfg = {}, SolverDiag* diag = nullptr) {
  if (lambda < 0.0) throw std::domain_error("solve_cumulant: lambda must be >= 0");
  return detail::rk4_scalar(lambda, t, cfg,
                            [&](double v) { return -family.value(theta, std::max(v, 0.0)); },
                            0.0, 1e12, diag);
}

/// Method-of-lines solution of the nonlocal cumulant equation on the shared
/// grid: per node x_j,
///   dV(x_j)/dt = -base(V(x_j)) + nonlocal(x_j, V),
/// the nonlocal rate evaluated with the same cell rule as
/// MechanismFamily::nonlocal_all. Values are floored at 0 after each step.
inline GridFunction solve_nonlocal_cumulant(const MechanismFamily& family,
                                            const GridFunction& f, double t,
                                            const OdeConfig& cfg = {},
                                            SolverDiag* diag = nullptr) {
  if (t < 0.0) throw std::domain_error("solve_nonlocal_cumulant: negative time");
  if (cfg.step <= 0.0 || cfg.step > cfg.max_time)
    throw std::invalid_argument("solve_nonlocal_cumulant: need 0 < step <= max_time");
  if (t > cfg.max_time) throw std::invalid_argument("solve_nonlocal_cumulant: time beyond max_time");
  const std::size_t m = f.cells();
  std::vector<double> v = f.values();

  auto deriv = [&](const std::vector<double>& y, std::vector<double>& dy) {
    GridFunction g(m, y);
    const std::vector<double> nl = family.nonlocal_all(g);
    dy.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
      dy[j] = -family.base().value(y[j]) + nl[j];
  };

  std::vector<double> k1, k2, k3, k4, tmp(m + 1), floored(m + 1);
  auto stage = [&](const std::vector<double>& y, double h, const std::vector<double>& kk,
                   std::vector<double>& out) {
    for (std::size_t j = 0; j <= m; ++j) out[j] = std::max(y[j] + h * kk[j], 0.0);
  };

  double remaining = t;
  while (remaining > 0.0) {
    const double h = std::min(cfg.step, remaining);
    deriv(v, k1);
    stage(v, 0.5 * h, k1, tmp);
    deriv(tmp, k2);
    stage(v, 0.5 * h, k2, tmp);
    deriv(tmp, k3);
    stage(v, h, k3, tmp);
    deriv(tmp, k4);
    for (std::size_t j = 0; j <= m; ++j) {
      double y = v[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (y < 0.0) {
        if (diag) diag->max_clamp = std::max(diag->max_clamp, -y);
        y = 0.0;
      }
      if (y > 1e12) throw blowup_error("solve_nonlocal_cumulant: value exceeded 1e12");
      v[j] = y;
    }
    remaining -= h;
  }
  return GridFunction(m, std::move(v));
}

struct MassAtom {
  double location = 0.0;  // must sit on the shared grid
  double mass = 0.0;
};

/// exp(-Σ mass_j · vtf(location_j)) — the transition-semigroup prediction for
/// the Laplace functional started from the given atomic measure.
inline double laplace_prediction(const std::vector<MassAtom>& mu0, const GridFunction& vtf) {
  double acc = 0.0;
  for (const auto& a : mu0) {
    if (a.mass < 0.0) throw std::invalid_argument("laplace_prediction: negative mass");
    acc += a.mass * vtf[vtf.node_index(a.location)];
  }
  return std::exp(-acc);
}

}  // namespace bflow

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bflow/grid.hpp"

namespace bflow {

/// Polynomial in θ with nonnegative use-range [0,1]; used for the θ-profiles
/// of the derivative family. Closed-form antiderivative keeps every θ-integral
/// exact.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }
  static Polynomial constant(double c) { return Polynomial({c}); }

  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
  }

  /// ∫_0^x of the polynomial.
  double integral(double x) const {
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;)
      acc = acc * x + coeffs_[i] / static_cast<double>(i + 1);
    return acc * x;
  }

  const std::vector<double>& coeffs() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;
};

struct JumpAtom {
  double size = 0.0;    // jump size u > 0
  double weight = 0.0;  // mass w >= 0
};

/// Branching mechanism value(z) = b z + σ²z²/2 + ∫(e^{-zu}-1+zu) m(du),
/// with m a finite atom list plus an optional exponential component
/// amp · decay · e^{-decay·u} du, whose integral has the closed form
/// amp · [decay/(decay+z) - 1 + z/decay].
class Mechanism {
 public:
  Mechanism(double drift, double diffusion, std::vector<JumpAtom> atoms = {},
            double jump_amp = 0.0, double jump_decay = 1.0)
      : drift_(drift), diffusion_(diffusion), atoms_(std::move(atoms)),
        jump_amp_(jump_amp), jump_decay_(jump_decay) {
    if (diffusion_ < 0.0) throw std::invalid_argument("Mechanism: diffusion must be >= 0");
    if (jump_amp_ < 0.0) throw std::invalid_argument("Mechanism: jump amplitude must be >= 0");
    if (jump_decay_ <= 0.0) throw std::invalid_argument("Mechanism: jump decay must be > 0");
    for (const auto& a : atoms_)
      if (a.size <= 0.0 || a.weight < 0.0)
        throw std::invalid_argument("Mechanism: atoms need positive size, nonnegative weight");
  }

  double value(double z) const {
    if (z < 0.0) throw std::domain_error("Mechanism::value: z must be >= 0");
    if (z == 0.0) return 0.0;
    double v = drift_ * z + 0.5 * diffusion_ * z * z;
    for (const auto& a : atoms_)
      v += a.weight * (std::exp(-z * a.size) - 1.0 + z * a.size);
    if (jump_amp_ > 0.0)
      v += jump_amp_ * (jump_decay_ / (jump_decay_ + z) - 1.0 + z / jump_decay_);
    return v;
  }

  double operator()(double z) const { return value(z); }

  /// value'(0) — the linear growth coefficient b.
  double drift() const { return drift_; }
  double diffusion() const { return diffusion_; }
  const std::vector<JumpAtom>& atoms() const { return atoms_; }
  double jump_amp() const { return jump_amp_; }
  double jump_decay() const { return jump_decay_; }

 private:
  double drift_;
  double diffusion_;
  std::vector<JumpAtom> atoms_;
  double jump_amp_;
  double jump_decay_;
};

/// θ-indexed mechanism family
///   value(θ, z) = base(z) - H(θ)·z - G(θ)·z/(ρ+z),
/// where H, G are the running integrals of the profiles h_θ, γ_θ and the
/// derivative in θ is -theta_derivative(θ, z) with
///   theta_derivative(θ, z) = h_θ z + γ_θ z/(ρ+z).
class MechanismFamily {
 public:
  MechanismFamily(Mechanism base, Polynomial h_profile, Polynomial gamma_profile, double rho)
      : base_(std::move(base)), h_(std::move(h_profile)), gamma_(std::move(gamma_profile)),
        rho_(rho) {
    if (rho_ <= 0.0) throw std::invalid_argument("MechanismFamily: rho must be > 0");
    for (int i = 0; i <= 16; ++i) {
      const double th = static_cast<double>(i) / 16.0;
      if (h_(th) < -1e-12 || gamma_(th) < -1e-12)
        throw std::invalid_argument("MechanismFamily: h and gamma must be >= 0 on [0,1]");
    }
  }

  const Mechanism& base() const { return base_; }
  double rho() const { return rho_; }
  double h_at(double theta) const { return h_(theta); }
  double gamma_at(double theta) const { return gamma_(theta); }
  double h_integral(double theta) const { return h_.integral(theta); }
  double gamma_integral(double theta) const { return gamma_.integral(theta); }

  /// sup over θ in [0,1] of h_θ + ∫ u n_θ(du) = h_θ + γ_θ/ρ (grid sup).
  double admissibility_bound(int grid = 101) const {
    double sup = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double th = static_cast<double>(i) / static_cast<double>(grid - 1);
      sup = std::max(sup, h_(th) + gamma_(th) / rho_);
    }
    return sup;
  }

  double theta_derivative(double theta, double z) const {
    check_theta(theta);
    if (z < 0.0) throw std::domain_error("theta_derivative: z must be >= 0");
    return h_(theta) * z + gamma_(theta) * z / (rho_ + z);
  }

  double value(double theta, double z) const {
    check_theta(theta);
    if (z < 0.0) throw std::domain_error("MechanismFamily::value: z must be >= 0");
    return base_.value(z) - h_.integral(theta) * z - gamma_.integral(theta) * z / (rho_ + z);
  }

  /// value'(θ, 0) in z — per-level linear growth coefficient.
  double drift_at(double theta) const {
    check_theta(theta);
    return base_.drift() - h_.integral(theta) - gamma_.integral(theta) / rho_;
  }

  /// Nonlocal rate at every node of the shared grid:
  ///   out[j] = ∫_0^1 [h_θ f(x_j∨θ) + γ_θ f(x_j∨θ)/(ρ + f(x_j∨θ))] dθ,
  /// composite rule on the grid cells: f at the cell right node (exact for the
  /// staircase convention), profiles at cell midpoints. O(cells) total via
  /// prefix/suffix accumulation.
  std::vector<double> nonlocal_all(const GridFunction& f) const {
    const std::size_t m = f.cells();
    const double dth = 1.0 / static_cast<double>(m);
    std::vector<double> out(m + 1);
    // suffix_l = sum over cells l' > l of dth * [h f(x_l') + g f(x_l')/(rho+f)]
    double suffix = 0.0;
    std::vector<double> suffixes(m + 1);
    suffixes[m] = 0.0;
    for (std::size_t l = m; l-- > 0;) {
      const double mid = (static_cast<double>(l) + 0.5) * dth;
      const double fv = f[l + 1];
      suffix += dth * (h_(mid) * fv + gamma_(mid) * fv / (rho_ + fv));
      suffixes[l] = suffix;
    }
    double ha = 0.0, ga = 0.0;  // prefix sums of dth*h(mid), dth*gamma(mid)
    for (std::size_t j = 0; j <= m; ++j) {
      if (j > 0) {
        const double mid = (static_cast<double>(j) - 0.5) * dth;
        ha += dth * h_(mid);
        ga += dth * gamma_(mid);
      }
      const double fj = f[j];
      out[j] = ha * fj + ga * fj / (rho_ + fj) + suffixes[j];
    }
    return out;
  }

  /// Nonlocal rate at a single grid point x (must be a node of f's grid).
  double nonlocal_value(double x, const GridFunction& f) const {
    const std::size_t j = f.node_index(x);
    return nonlocal_all(f)[j];
  }

 private:
  void check_theta(double theta) const {
    if (theta < 0.0 || theta > 1.0)
      throw std::domain_error("MechanismFamily: theta outside [0,1]");
  }

  Mechanism base_;
  Polynomial h_;
  Polynomial gamma_;
  double rho_;
};

/// Catalog entry, the numeric record exposed in experiment configs.
struct FamilyParams {
  std::string name = "custom";
  double b0 = 0.0;      // base drift
  double c = 0.0;       // base diffusion σ²
  double gamma_m = 0.0; // base exponential jump amplitude
  double rho_m = 1.0;   // base exponential jump decay
  double h = 0.0;       // derivative family linear coefficient (constant in θ)
  double gamma = 0.0;   // derivative family jump amplitude (constant in θ)
  double rho = 1.0;     // derivative family jump decay
};

inline MechanismFamily make_family(const FamilyParams& p) {
  return MechanismFamily(Mechanism(p.b0, p.c, {}, p.gamma_m, p.rho_m),
                         Polynomial::constant(p.h), Polynomial::constant(p.gamma), p.rho);
}

inline FamilyParams feller_params() {
  FamilyParams p;
  p.name = "feller";
  p.c = 1.0;
  return p;
}

inline FamilyParams nonlocal_params() {
  FamilyParams p;
  p.name = "nonlocal";
  p.c = 1.0;
  p.h = 0.5;
  p.gamma = 0.5;
  p.rho = 1.0;
  return p;
}

}  // namespace bflow

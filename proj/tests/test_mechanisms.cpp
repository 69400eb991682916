#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bflow/mechanisms/mechanism.hpp"
#include "bflow/mechanisms/offspring_law.hpp"
#include "bflow/rng.hpp"

using namespace bflow;

namespace {

// independent quadrature oracle (composite Simpson, fixed panel count)
template <class F>
double simpson(F f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

OffspringLaw binary_law() { return OffspringLaw({0.5, 0.0, 0.5}); }

}  // namespace

TEST_CASE("pgf evaluation") {
  const auto law = binary_law();
  CHECK(law.pgf(1.0) == 1.0);
  CHECK(law.pgf(0.5) == Catch::Approx(0.625).margin(1e-15));
  const OffspringLaw death({1.0});
  CHECK(death.pgf(0.0) == 1.0);
  CHECK(death.pgf(0.7) == 1.0);
  CHECK_THROWS_AS(law.pgf(-0.1), std::domain_error);
  CHECK_THROWS_AS(law.pgf(1.1), std::domain_error);
}

TEST_CASE("offspring law validation and mean cache") {
  CHECK_THROWS_AS(OffspringLaw({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(OffspringLaw({1.5, -0.5}), std::invalid_argument);
  const OffspringLaw law({0.2, 0.3, 0.1, 0.4});
  CHECK(law.mean() == law.recompute_mean());
  CHECK(law.mean() == Catch::Approx(0.3 + 0.2 + 1.2).margin(1e-15));
  CHECK(law.support_bound() == 3);
}

TEST_CASE("pgf normalization holds for randomly generated laws") {
  Rng rng(20260810, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 12);
    std::vector<double> w(n + 1);
    double sum = 0.0;
    for (auto& x : w) { x = -std::log(rng.uniform_pos()); sum += x; }
    for (auto& x : w) x /= sum;
    double resum = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) resum += w[i];
    w.back() = 1.0 - resum;
    const OffspringLaw law(w);
    CHECK(law.pgf(1.0) == 1.0);
    // pgf is nondecreasing on [0,1]
    double prev = law.pgf(0.0);
    for (int i = 1; i <= 10; ++i) {
      const double cur = law.pgf(i / 10.0);
      CHECK(cur >= prev - 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("mechanism value") {
  const Mechanism feller(0.0, 1.0);
  CHECK(feller.value(2.0) == Catch::Approx(2.0).margin(1e-15));
  CHECK(feller.value(0.0) == 0.0);

  // exponential jump component: density decay * e^{-decay u}, amp 1, decay 1
  const Mechanism jump(0.0, 0.0, {}, 1.0, 1.0);
  CHECK(jump.value(1.0) == Catch::Approx(0.5).margin(1e-14));
  const double quad = simpson(
      [](double u) { return (std::exp(-u) - 1.0 + u) * std::exp(-u); }, 0.0, 60.0);
  CHECK(jump.value(1.0) == Catch::Approx(quad).margin(1e-10));
  for (double z : {0.3, 1.7, 4.0}) {
    const double q = simpson(
        [z](double u) { return (std::exp(-z * u) - 1.0 + z * u) * std::exp(-u); }, 0.0, 80.0);
    CHECK(jump.value(z) == Catch::Approx(q).margin(1e-9));
  }

  // atom part against the direct formula
  const Mechanism atom(0.5, 0.0, {{2.0, 0.3}});
  const double z = 1.3;
  CHECK(atom.value(z) ==
        Catch::Approx(0.5 * z + 0.3 * (std::exp(-2.0 * z) - 1.0 + 2.0 * z)).margin(1e-14));

  CHECK_THROWS_AS(feller.value(-1.0), std::domain_error);
  CHECK_THROWS_AS(Mechanism(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(Mechanism(0.0, 0.0, {}, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Mechanism(0.0, 0.0, {}, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("mechanism convexity on [0,10]") {
  const std::vector<Mechanism> mechs = {
      Mechanism(0.0, 1.0),
      Mechanism(-0.5, 0.3, {{1.5, 0.2}}, 0.7, 2.0),
      Mechanism(1.0, 0.0, {}, 2.0, 0.5),
  };
  for (const auto& m : mechs) {
    const double dz = 0.01;
    for (double z = dz; z + dz <= 10.0; z += dz) {
      const double second = m.value(z + dz) - 2.0 * m.value(z) + m.value(z - dz);
      CHECK(second >= -1e-9);
    }
  }
}

TEST_CASE("derivative family closed forms") {
  const MechanismFamily fam(Mechanism(0.0, 1.0), Polynomial::constant(1.0),
                            Polynomial::constant(0.0), 1.0);
  CHECK(fam.theta_derivative(0.5, 3.0) == Catch::Approx(3.0).margin(1e-15));
  CHECK(fam.theta_derivative(0.2, 0.0) == 0.0);

  const MechanismFamily jumpfam(Mechanism(0.0, 1.0), Polynomial::constant(0.0),
                                Polynomial::constant(1.0), 1.0);
  CHECK(jumpfam.theta_derivative(0.0, 1.0) == Catch::Approx(0.5).margin(1e-14));
  const double quad = simpson(
      [](double u) { return (1.0 - std::exp(-u)) * std::exp(-u); }, 0.0, 60.0);
  CHECK(jumpfam.theta_derivative(0.0, 1.0) == Catch::Approx(quad).margin(1e-10));
}

TEST_CASE("family value in theta") {
  // theta_derivative(θ, z) = z, base z²/2: value(1, 2) = 2 - 2 = 0
  const MechanismFamily fam(Mechanism(0.0, 1.0), Polynomial::constant(1.0),
                            Polynomial::constant(0.0), 1.0);
  CHECK(fam.value(0.0, 2.0) == Catch::Approx(fam.base().value(2.0)).margin(1e-15));
  CHECK(fam.value(1.0, 2.0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(fam.value(0.7, 1.0) <= fam.value(0.3, 1.0));

  // θ-integral closed form against Simpson quadrature of theta_derivative
  const MechanismFamily poly(Mechanism(0.2, 0.8, {}, 0.4, 1.5),
                             Polynomial({0.3, 0.4}), Polynomial({0.2, 0.0, 0.6}), 2.0);
  for (double theta : {0.25, 0.6, 1.0}) {
    for (double z : {0.5, 2.0, 7.0}) {
      const double integral = simpson(
          [&](double s) { return poly.theta_derivative(s, z); }, 0.0, theta, 2000);
      CHECK(poly.value(theta, z) ==
            Catch::Approx(poly.base().value(z) - integral).margin(1e-10));
    }
  }
}

TEST_CASE("derivative consistency of the family") {
  const MechanismFamily fam(Mechanism(0.1, 1.0, {}, 0.3, 1.0),
                            Polynomial({0.5, 0.2}), Polynomial::constant(0.5), 1.0);
  double worst_ratio = 0.0;
  for (double delta : {1e-3, 1e-4}) {
    double worst = 0.0;
    for (int ti = 0; ti <= 8; ++ti) {
      const double theta = ti / 10.0;
      for (double z : {0.5, 1.0, 3.0}) {
        const double fd = (fam.value(theta, z) - fam.value(theta + delta, z)) / delta;
        worst = std::max(worst, std::abs(fd - fam.theta_derivative(theta, z)));
      }
    }
    worst_ratio = std::max(worst_ratio, worst / delta);
  }
  CHECK(worst_ratio < 10.0);  // |fd - derivative| = O(delta) with modest constant
}

TEST_CASE("nonlocal rate") {
  const std::size_t m = 200;
  const MechanismFamily drift_only(Mechanism(0.0, 1.0), Polynomial::constant(1.0),
                                   Polynomial::constant(0.0), 1.0);
  const MechanismFamily jump_only(Mechanism(0.0, 1.0), Polynomial::constant(0.0),
                                  Polynomial::constant(1.0), 1.0);

  CHECK(drift_only.nonlocal_value(0.5, GridFunction::constant(m, 0.0)) == 0.0);
  CHECK(drift_only.nonlocal_value(0.25, GridFunction::constant(m, 3.7)) ==
        Catch::Approx(3.7).margin(1e-12));
  CHECK(jump_only.nonlocal_value(0.0, GridFunction::constant(m, 1.0)) ==
        Catch::Approx(0.5).margin(1e-12));

  CHECK_THROWS_AS(drift_only.nonlocal_value(0.12345, GridFunction::constant(m, 1.0)),
                  grid_mismatch_error);

  // midpoint rule is exact for a θ-linear profile with constant f
  const MechanismFamily linear_h(Mechanism(0.0, 1.0), Polynomial({0.0, 1.0}),
                                 Polynomial::constant(0.0), 1.0);
  CHECK(linear_h.nonlocal_value(0.0, GridFunction::constant(m, 1.0)) ==
        Catch::Approx(0.5).margin(1e-12));

  // refinement against an independent quadrature for a step f
  const auto f_fun = [](double x) { return x <= 0.5 ? 2.0 : 1.0; };
  const MechanismFamily fam(Mechanism(0.0, 1.0), Polynomial({0.2, 0.5}),
                            Polynomial({0.4, 0.1}), 1.5);
  const double x = 0.25;
  const auto integrand = [&](double th) {
    const double fv = f_fun(std::max(x, th));
    return fam.h_at(th) * fv + fam.gamma_at(th) * fv / (fam.rho() + fv);
  };
  const double oracle = simpson(integrand, 0.0, 0.5, 20000) + simpson(integrand, 0.5, 1.0, 20000);
  const GridFunction f(m, [&](double xx) { return f_fun(xx); });
  CHECK(fam.nonlocal_value(x, f) == Catch::Approx(oracle).margin(1e-6));
  const GridFunction f2(2 * m, [&](double xx) { return f_fun(xx); });
  CHECK(std::abs(fam.nonlocal_value(x, f2) - oracle) <=
        std::abs(fam.nonlocal_value(x, f) - oracle) + 1e-12);
}

TEST_CASE("admissibility bound") {
  const MechanismFamily fam(Mechanism(0.0, 1.0), Polynomial::constant(0.5),
                            Polynomial::constant(0.5), 1.0);
  CHECK(fam.admissibility_bound() == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(MechanismFamily(Mechanism(0.0, 1.0), Polynomial::constant(-1.0),
                                  Polynomial::constant(0.0), 1.0),
                  std::invalid_argument);
}

TEST_CASE("grid function conventions") {
  const GridFunction f = GridFunction::from_levels(200, {0.5, 1.0}, {2.0, 1.0});
  CHECK(f[0] == 2.0);
  CHECK(f[f.node_index(0.5)] == 2.0);
  CHECK(f[f.node_index(0.505)] == 1.0);
  CHECK(f.value_at(0.4999) == 2.0);
  CHECK(f.value_at(0.5) == 2.0);
  CHECK(f.value_at(0.501) == 1.0);
  CHECK_THROWS_AS(GridFunction(10, std::vector<double>(11, -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction::from_levels(200, {0.5, 0.9}, {2.0, 1.0}), std::invalid_argument);
}

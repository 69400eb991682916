#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bflow/experiments/statistics.hpp"
#include "bflow/flowsim/flow.hpp"
#include "bflow/flowsim/path_io.hpp"
#include "bflow/flowsim/rescale.hpp"
#include "bflow/mechanisms/recipe.hpp"

using namespace bflow;

namespace {

// b(0.4) = 0.3, b(1.0) = 0.1, offspring 2 otherwise; b linear in θ
DiscreteFlowFamily ramp_family() {
  return DiscreteFlowFamily(1.0, 1.0, [](double theta) {
    const double p0 = 13.0 / 30.0 - theta / 3.0;
    return OffspringLaw({p0, 0.0, 1.0 - p0});
  });
}

// B(θ) = aθ with B(0) = 0: birth θ-marks are exactly uniform
DiscreteFlowFamily linear_birth_family(double a) {
  return DiscreteFlowFamily(1.0, 1.0, [a](double theta) {
    return OffspringLaw({1.0 - a * theta, 0.0, a * theta});
  });
}

}  // namespace

TEST_CASE("rule application: birth suffix") {
  const LevelGrid grid({0.4, 1.0});
  const FlowDriver driver(ramp_family(), grid, 1.0);
  const std::vector<std::int64_t> counts{2, 3};
  const auto ev = driver.classify_candidate(counts, EventKind::birth, 0.7, 2.5, 3);
  REQUIRE(ev.has_value());
  CHECK(ev->first_level == 1);
  CHECK(ev->last_level == 1);
  std::vector<std::int64_t> next = counts;
  FlowPath::apply(*ev, next);
  CHECK(next == std::vector<std::int64_t>{2, 5});
}

TEST_CASE("rule application: death range") {
  const LevelGrid grid({0.4, 1.0});
  const FlowDriver driver(ramp_family(), grid, 1.0);
  CHECK(driver.level_death_prob(0) == Catch::Approx(0.3).margin(1e-12));
  CHECK(driver.level_death_prob(1) == Catch::Approx(0.1).margin(1e-12));
  const std::vector<std::int64_t> counts{2, 3};
  const auto ev = driver.classify_candidate(counts, EventKind::death, 0.2, 1.5, 0);
  REQUIRE(ev.has_value());
  CHECK(ev->first_level == 0);
  CHECK(ev->last_level == 0);
  std::vector<std::int64_t> next = counts;
  FlowPath::apply(*ev, next);
  CHECK(next == std::vector<std::int64_t>{1, 3});

  // u above every protected level: no-op
  CHECK(!driver.classify_candidate(counts, EventKind::death, 0.2, 2.5, 0).has_value());
}

TEST_CASE("candidate rate") {
  const LevelGrid grid({0.4, 1.0});
  const FlowDriver driver(ramp_family(), grid, 1.0);
  const std::vector<std::int64_t> extinct{0, 0};
  CHECK(driver.candidate_rate(extinct) == 0.0);
  const std::vector<std::int64_t> counts{2, 3};
  CHECK(driver.candidate_rate(counts) == Catch::Approx(3.6).margin(1e-12));

  // single level without deaths reduces to σX
  const FlowDriver solo(linear_birth_family(1.0), LevelGrid({1.0}), 1.0);
  const std::vector<std::int64_t> one{5};
  CHECK(solo.candidate_rate(one) == Catch::Approx(5.0 * 1.0).margin(1e-12));
}

TEST_CASE("acceptance frequency matches the exact staircase rate") {
  const LevelGrid grid({0.4, 1.0});
  const FlowDriver driver(ramp_family(), grid, 1.0);
  const std::vector<std::int64_t> counts{2, 3};
  // births always hit the top level: rate 3(1-0.1) = 2.7
  // deaths hit the union of [0,b_j]x[0,X_j]: (0.3-0.1)*2 + 0.1*3 = 0.7
  const double accept_prob = (2.7 + 0.7) / 3.6;
  Rng rng(314159, 0);
  const std::size_t n = 200000;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (driver.sample_candidate(counts, rng).has_value()) ++accepted;
  const double freq = static_cast<double>(accepted) / static_cast<double>(n);
  const double se = std::sqrt(accept_prob * (1.0 - accept_prob) / static_cast<double>(n));
  CHECK(std::abs(freq - accept_prob) <= 3.0 * se);
}

TEST_CASE("birth theta marks are uniform for a linear family") {
  const LevelGrid grid({0.5, 1.0});
  const FlowDriver driver(linear_birth_family(0.5), grid, 1.0);
  const std::vector<std::int64_t> counts{3, 5};
  Rng rng(2718, 3);
  const std::size_t bins = 10;
  std::vector<std::size_t> observed(bins, 0);
  std::size_t births = 0;
  while (births < 20000) {
    const auto ev = driver.sample_candidate(counts, rng);
    if (ev && ev->kind == EventKind::birth) {
      const std::size_t b = std::min(bins - 1, static_cast<std::size_t>(ev->theta * bins));
      ++observed[b];
      ++births;
    }
  }
  const double stat = chi_square_stat(observed, std::vector<double>(bins, 0.1), births);
  CHECK(stat < chi_square_crit_999(bins - 1));
}

TEST_CASE("single level flow never rejects a candidate") {
  const auto fam = ramp_family();
  const FlowOptions opts;
  const std::int64_t x0 = 4;
  const FlowPath p = simulate_flow(fam, LevelGrid({1.0}), 1.0, std::span(&x0, 1), 3.0, {11, 5});
  CHECK(p.noop_count == 0);
}

TEST_CASE("level ordering holds across replicas of the recipe flow") {
  const auto built = build_discrete_family(make_family(nonlocal_params()), 8);
  const LevelGrid grid({0.25, 0.5, 0.75, 1.0});
  FlowOptions opts;
  opts.validate = true;  // throws on any ordering violation
  const std::vector<std::int64_t> x0{2, 4, 6, 8};
  for (std::uint64_t r = 0; r < 200; ++r) {
    const FlowPath p =
        simulate_flow(built.family, grid, 8.0, x0, 1.0, {777, r}, opts, built.label, built.k);
    const auto rep = verify_path(p);
    CHECK(rep.replay_ok);
    CHECK(rep.monotone_ok);
    CHECK(rep.times_ok);
  }
}

TEST_CASE("flow marginal equals the single-level simulation in law") {
  const auto built = build_discrete_family(make_family(nonlocal_params()), 8);
  const LevelGrid grid({0.25, 0.5, 0.75, 1.0});
  const std::vector<std::int64_t> x0{2, 4, 6, 8};
  const double t = 0.7;
  const std::size_t level = 1;  // q = 0.5, θ-scale 8 → law at θ = 4
  const std::size_t n = 20000;

  const FlowDriver driver(built.family, grid, 8.0);
  const OffspringLaw law = built.family.law_at(8.0 * 0.5);
  const DiscreteCdf cdf = law.make_sampler();

  for (double s : {0.2, 0.5, 0.8}) {
    RunningStat flow_stat, single_stat;
    for (std::uint64_t r = 0; r < n; ++r) {
      Rng rng_f = SeedSpec{333, r}.make_rng();
      std::vector<std::int64_t> counts = x0;
      struct Term {
        void hold(double, double, std::span<const std::int64_t>) {}
        void event(const FlowEvent&, std::span<const std::int64_t>) {}
        std::vector<std::int64_t> last;
        void finish(double, std::span<const std::int64_t> c, std::uint64_t) {
          last.assign(c.begin(), c.end());
        }
      } sink;
      simulate_flow_into(driver, counts, t, rng_f, sink);
      flow_stat.push(std::pow(s, static_cast<double>(sink.last[level])));

      Rng rng_s = SeedSpec{334, r}.make_rng();
      Term sink2;
      simulate_single_into(cdf, built.sigma_k, x0[level], t, rng_s, sink2);
      single_stat.push(std::pow(s, static_cast<double>(sink2.last[0])));
    }
    const double gap = std::abs(flow_stat.mean() - single_stat.mean());
    CHECK(gap <= 4.0 * pooled_se(flow_stat.std_error(), single_stat.std_error()));
  }
}

TEST_CASE("flow determinism") {
  const auto fam = ramp_family();
  const LevelGrid grid({0.4, 1.0});
  const std::vector<std::int64_t> x0{2, 3};
  const FlowPath a = simulate_flow(fam, grid, 1.0, x0, 4.0, {61, 4});
  const FlowPath b = simulate_flow(fam, grid, 1.0, x0, 4.0, {61, 4});
  const FlowPath c = simulate_flow(fam, grid, 1.0, x0, 4.0, {61, 5});
  CHECK(path_to_string(a) == path_to_string(b));
  CHECK(path_to_string(a) != path_to_string(c));
}

TEST_CASE("flow input validation") {
  const auto fam = ramp_family();
  const LevelGrid grid({0.4, 1.0});
  const std::vector<std::int64_t> bad{3, 2};
  CHECK_THROWS_AS(simulate_flow(fam, grid, 1.0, bad, 1.0, {1, 1}), std::invalid_argument);
  const std::vector<std::int64_t> ok{1, 2};
  CHECK_THROWS_AS(simulate_flow(fam, grid, 2.0, ok, 1.0, {1, 1}), std::domain_error);
  CHECK_THROWS_AS(LevelGrid({0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(LevelGrid({0.5, 1.5}), std::invalid_argument);
}

TEST_CASE("extinction closes the path") {
  const auto fam = ramp_family();
  const std::vector<std::int64_t> x0{0, 0};
  const FlowPath p = simulate_flow(fam, LevelGrid({0.4, 1.0}), 1.0, x0, 5.0, {1, 2});
  CHECK(p.events.empty());
  CHECK(p.horizon == 5.0);
}

TEST_CASE("rescaled views") {
  FlowPath p;
  p.levels = {0.5, 1.0};
  p.k_scale = 1;
  const std::vector<std::int64_t> counts{2, 3};

  // k = 1 identity on level values
  const RescaledView view(p);
  CHECK(view.level_value(counts, 1) == 3.0);

  // f ≡ 1 pairs to the total mass
  const std::vector<double> ones{1.0, 1.0};
  CHECK(rescaled_pairing(counts, 1, ones) == rescaled_total(counts, 1));

  // f(x) = x on atoms (2, 1) at (0.5, 1): 0.5·2 + 1·1 = 2
  const std::vector<double> id{0.5, 1.0};
  CHECK(rescaled_pairing(counts, 1, id) == Catch::Approx(2.0).margin(1e-15));

  // cross-check against f(1)Y(1) - ∫ f'(q) Y(q) dq with the staircase view
  const auto y_at = [&](double q) { return q < 0.5 ? 0.0 : (q < 1.0 ? 2.0 : 3.0); };
  double integral = 0.0;
  const int nq = 200000;
  for (int i = 0; i < nq; ++i) integral += y_at((i + 0.5) / nq) / nq;
  CHECK(rescaled_pairing(counts, 1, id) == Catch::Approx(3.0 - integral).margin(1e-4));

  const std::vector<double> masses = rescaled_masses(counts, 2);
  CHECK(masses == std::vector<double>{1.0, 0.5});
}

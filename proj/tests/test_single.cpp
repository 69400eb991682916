#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bflow/cumulant/solvers.hpp"
#include "bflow/experiments/statistics.hpp"
#include "bflow/flowsim/path_io.hpp"
#include "bflow/flowsim/single.hpp"

using namespace bflow;

TEST_CASE("zero initial state is absorbing") {
  const FlowPath p = simulate_single(OffspringLaw({0.5, 0.0, 0.5}), 1.0, 0, 2.0, {7, 0});
  CHECK(p.events.empty());
  CHECK(p.terminal == std::vector<std::int64_t>{0});
  CHECK(p.horizon == 2.0);
}

TEST_CASE("pure death mean decay") {
  const OffspringLaw death({1.0});
  const double horizon = std::log(2.0);
  RunningStat stat;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    const FlowPath p = simulate_single(death, 1.0, 10, horizon, {41, r});
    stat.push(static_cast<double>(p.terminal[0]));
  }
  // E X_t = 10 e^{-t} = 5 at t = ln 2
  CHECK(std::abs(stat.mean() - 5.0) <= 4.0 * stat.std_error());
}

TEST_CASE("critical binary extinction probability") {
  const OffspringLaw binary({0.5, 0.0, 0.5});
  RunningStat stat;
  for (std::uint64_t r = 0; r < 40000; ++r) {
    const FlowPath p = simulate_single(binary, 1.0, 1, 2.0, {42, r});
    stat.push(p.terminal[0] == 0 ? 1.0 : 0.0);
  }
  // σt/(2+σt) = 1/2 at σ=1, t=2
  CHECK(std::abs(stat.mean() - 0.5) <= 4.0 * stat.std_error());
}

TEST_CASE("marginal pgf matches the generating-function flow") {
  const OffspringLaw law({0.3, 0.2, 0.5});
  const double sigma = 1.3, t = 1.0;
  const std::int64_t x0 = 3;
  for (double s : {0.2, 0.5, 0.8}) {
    RunningStat stat;
    for (std::uint64_t r = 0; r < 20000; ++r) {
      const FlowPath p = simulate_single(law, sigma, x0, t, {99, r});
      stat.push(std::pow(s, static_cast<double>(p.terminal[0])));
    }
    const double oracle = std::pow(solve_pgf_ode(law, sigma, t, s), static_cast<double>(x0));
    CHECK(std::abs(stat.mean() - oracle) <= 4.0 * stat.std_error());
  }
}

TEST_CASE("sup moment bound") {
  const OffspringLaw law({0.4, 0.0, 0.6});  // supercritical, g'(1)=1.2
  const double sigma = 1.0, t = 1.0;
  RunningStat sup_stat;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    const FlowPath p = simulate_single(law, sigma, 5, t, {123, r});
    std::int64_t x = p.initial.counts[0], sup = x;
    for (const auto& ev : p.events) {
      x += (ev.kind == EventKind::birth ? ev.offspring - 1 : -1);
      sup = std::max(sup, x);
    }
    sup_stat.push(static_cast<double>(sup));
  }
  const double bound = 5.0 * std::exp(sigma * 1.2 * t);
  CHECK(sup_stat.mean() <= bound + 4.0 * sup_stat.std_error());
}

TEST_CASE("determinism and stream independence") {
  const OffspringLaw law({0.3, 0.2, 0.5});
  const FlowPath a = simulate_single(law, 1.0, 4, 1.5, {2024, 17});
  const FlowPath b = simulate_single(law, 1.0, 4, 1.5, {2024, 17});
  const FlowPath c = simulate_single(law, 1.0, 4, 1.5, {2024, 18});
  CHECK(path_to_string(a) == path_to_string(b));
  CHECK(path_to_string(a) != path_to_string(c));
}

TEST_CASE("paths replay and keep strictly increasing times") {
  const OffspringLaw law({0.35, 0.0, 0.4, 0.25});
  for (std::uint64_t r = 0; r < 50; ++r) {
    const FlowPath p = simulate_single(law, 2.0, 6, 1.0, {5150, r});
    const auto rep = verify_path(p);
    CHECK(rep.replay_ok);
    CHECK(rep.monotone_ok);
    CHECK(rep.times_ok);
  }
}

TEST_CASE("event cap raises a resource error") {
  const OffspringLaw explosive({0.0, 0.0, 1.0});
  SimOptions opts;
  opts.event_cap = 500;
  CHECK_THROWS_AS(simulate_single(explosive, 10.0, 10, 50.0, {1, 1}, opts), resource_error);
}

TEST_CASE("input validation") {
  const OffspringLaw law({1.0});
  CHECK_THROWS_AS(simulate_single(law, 0.0, 1, 1.0, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(simulate_single(law, 1.0, -1, 1.0, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(simulate_single(law, 1.0, 1, 0.0, {1, 1}), std::invalid_argument);
}

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "bflow/flowsim/path.hpp"
#include "bflow/mechanisms/offspring_law.hpp"
#include "bflow/rng.hpp"

namespace bflow {

struct SimOptions {
  std::uint64_t event_cap = 100'000'000;
  bool validate = false;
};

/// Sink that materializes the full event history.
class RecordingSink {
 public:
  RecordingSink(std::vector<double> levels, double kappa, int k_scale, std::string family_id,
                SeedSpec seed, std::span<const std::int64_t> x0) {
    path_.levels = std::move(levels);
    path_.kappa = kappa;
    path_.k_scale = k_scale;
    path_.family_id = std::move(family_id);
    path_.seed = seed;
    path_.initial = FlowState{0.0, {x0.begin(), x0.end()}};
  }

  void hold(double, double, std::span<const std::int64_t>) {}
  void event(const FlowEvent& ev, std::span<const std::int64_t>) { path_.events.push_back(ev); }
  void finish(double horizon, std::span<const std::int64_t> counts, std::uint64_t noops) {
    path_.horizon = horizon;
    path_.terminal.assign(counts.begin(), counts.end());
    path_.noop_count = noops;
  }

  FlowPath take() { return std::move(path_); }

 private:
  FlowPath path_;
};

/// Exact event-by-event run of the single branching process: while X > 0,
/// events arrive at rate σX; each replaces one individual by a draw from the
/// offspring law. The sink sees every constancy interval and every event.
template <class Sink>
void simulate_single_into(const DiscreteCdf& sampler, double sigma, std::int64_t x0,
                          double horizon, Rng& rng, Sink& sink, const SimOptions& opts = {}) {
  if (x0 < 0) throw std::invalid_argument("simulate_single: negative initial state");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("simulate_single: horizon must be positive and finite");
  std::int64_t x = x0;
  double t = 0.0;
  std::uint64_t events = 0;
  while (x > 0) {
    double tn = t + rng.exponential(sigma * static_cast<double>(x));
    if (!(tn < horizon)) break;
    if (tn <= t) tn = std::nextafter(t, horizon);  // event times strictly increase
    if (++events > opts.event_cap)
      throw resource_error("simulate_single: event cap exceeded (supercritical blowup?)");
    sink.hold(t, tn, std::span<const std::int64_t>(&x, 1));
    const std::int64_t z = sampler.sample(rng);
    x += z - 1;
    FlowEvent ev;
    ev.time = tn;
    ev.kind = (z == 0) ? EventKind::death : EventKind::birth;
    ev.offspring = z;
    sink.event(ev, std::span<const std::int64_t>(&x, 1));
    t = tn;
  }
  sink.hold(t, horizon, std::span<const std::int64_t>(&x, 1));
  sink.finish(horizon, std::span<const std::int64_t>(&x, 1), 0);
}

/// Recorded variant; the marginal law at any t solves the generating-function
/// equation handled by solve_pgf_ode.
inline FlowPath simulate_single(const OffspringLaw& law, double sigma, std::int64_t x0,
                                double horizon, SeedSpec seed, const SimOptions& opts = {},
                                std::string family_id = "single") {
  if (sigma <= 0.0) throw std::invalid_argument("simulate_single: sigma must be > 0");
  const DiscreteCdf sampler = law.make_sampler();
  Rng rng = seed.make_rng();
  RecordingSink sink({1.0}, 0.0, 1, std::move(family_id), seed,
                     std::span<const std::int64_t>(&x0, 1));
  simulate_single_into(sampler, sigma, x0, horizon, rng, sink, opts);
  return sink.take();
}

}  // namespace bflow

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bflow/flowsim/path.hpp"
#include "bflow/flowsim/rescale.hpp"

namespace bflow {

/// Captures the state at sorted query times (càdlàg: a query at an event time
/// sees the post-event state) and, optionally, the running per-level sup.
class SnapshotSink {
 public:
  SnapshotSink(std::span<const double> times, bool track_sup)
      : times_(times.begin(), times.end()), track_sup_(track_sup) {
    snapshots_.resize(times_.size());
    if (track_sup_) sups_.resize(times_.size());
  }

  void hold(double, double t1, std::span<const std::int64_t> counts) {
    if (track_sup_ && running_sup_.empty()) running_sup_.assign(counts.begin(), counts.end());
    while (next_ < times_.size() && times_[next_] < t1) serve(counts);
  }

  void event(const FlowEvent&, std::span<const std::int64_t> counts) {
    if (!track_sup_) return;
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (counts[j] > running_sup_[j]) running_sup_[j] = counts[j];
  }

  void finish(double, std::span<const std::int64_t> counts, std::uint64_t noops) {
    if (track_sup_ && running_sup_.empty()) running_sup_.assign(counts.begin(), counts.end());
    while (next_ < times_.size()) serve(counts);
    noops_ = noops;
  }

  const std::vector<std::int64_t>& at(std::size_t ti) const { return snapshots_[ti]; }
  const std::vector<std::int64_t>& sup_at(std::size_t ti) const { return sups_[ti]; }
  std::uint64_t noops() const { return noops_; }

 private:
  void serve(std::span<const std::int64_t> counts) {
    snapshots_[next_].assign(counts.begin(), counts.end());
    if (track_sup_) sups_[next_] = running_sup_;
    ++next_;
  }

  std::vector<double> times_;
  bool track_sup_;
  std::size_t next_ = 0;
  std::vector<std::vector<std::int64_t>> snapshots_;
  std::vector<std::vector<std::int64_t>> sups_;
  std::vector<std::int64_t> running_sup_;
  std::uint64_t noops_ = 0;
};

/// Accumulates, per query time t,
///   G(⟨Y_t,f⟩) - G(⟨Y_0,f⟩) - ∫_0^t G(⟨Y_s,f⟩)·⟨Y_s,Φ⟩ ds,   G(x) = e^{-x},
/// the time integral summed exactly over the constancy intervals of the
/// simulated staircase.
class MartingaleSink {
 public:
  MartingaleSink(std::span<const double> times, std::span<const double> f_levels,
                 std::span<const double> gen_levels, int k)
      : times_(times.begin(), times.end()), f_(f_levels.begin(), f_levels.end()),
        gen_(gen_levels.begin(), gen_levels.end()), k_(k) {
    values_.resize(times_.size());
  }

  void hold(double t0, double t1, std::span<const std::int64_t> counts) {
    const double w = rescaled_pairing(counts, k_, f_);
    const double g = rescaled_pairing(counts, k_, gen_);
    if (!started_) {
      started_ = true;
      ew0_ = std::exp(-w);
    }
    const double ew = std::exp(-w);
    double tprev = t0;
    while (next_ < times_.size() && times_[next_] < t1) {
      const double tq = times_[next_];
      integral_ += ew * g * (tq - tprev);
      values_[next_] = ew - ew0_ - integral_;
      tprev = tq;
      ++next_;
    }
    integral_ += ew * g * (t1 - tprev);
    last_ew_ = ew;
  }

  void event(const FlowEvent&, std::span<const std::int64_t>) {}

  void finish(double, std::span<const std::int64_t>, std::uint64_t) {
    while (next_ < times_.size()) {
      values_[next_] = last_ew_ - ew0_ - integral_;
      ++next_;
    }
  }

  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> times_, f_, gen_;
  int k_;
  bool started_ = false;
  double ew0_ = 1.0;
  double last_ew_ = 1.0;
  double integral_ = 0.0;
  std::size_t next_ = 0;
  std::vector<double> values_;
};

}  // namespace bflow

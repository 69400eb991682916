#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bflow/rng.hpp"

namespace bflow {

struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ordered simulation levels q_1 < ... < q_n in (0,1].
struct LevelGrid {
  std::vector<double> levels;

  explicit LevelGrid(std::vector<double> qs) : levels(std::move(qs)) {
    if (levels.empty()) throw std::invalid_argument("LevelGrid: empty");
    double prev = 0.0;
    for (double q : levels) {
      if (!(q > prev) || q > 1.0 + 1e-12)
        throw std::invalid_argument("LevelGrid: levels must be strictly increasing in (0,1]");
      prev = q;
    }
  }

  std::size_t size() const { return levels.size(); }
  double top() const { return levels.back(); }
};

/// Replica stream identity. Identical pairs give bit-identical event
/// sequences; distinct pairs give independent streams.
struct SeedSpec {
  std::uint64_t master_seed = 1;
  std::uint64_t replica_index = 0;

  Rng make_rng() const { return Rng(master_seed, replica_index); }
};

enum class EventKind : std::uint8_t { birth, death };

/// One accepted event of the driving randomness. Births add offspring-1 to
/// every level in [first_level, last_level] (a suffix of the grid); deaths
/// subtract 1 on the contiguous range.
struct FlowEvent {
  double time = 0.0;
  EventKind kind = EventKind::birth;
  double theta = 0.0;
  double u = 0.0;
  std::int64_t offspring = 0;  // births only, >= 1
  std::int32_t first_level = 0;
  std::int32_t last_level = 0;
};

struct FlowState {
  double time = 0.0;
  std::vector<std::int64_t> counts;  // nondecreasing across levels

  void require_valid() const {
    std::int64_t prev = 0;
    for (std::int64_t c : counts) {
      if (c < prev) throw std::invalid_argument("FlowState: counts must be nondecreasing");
      prev = c;
    }
    if (!counts.empty() && counts.front() < 0)
      throw std::invalid_argument("FlowState: negative count");
  }
};

/// Full event history of one replica.
struct FlowPath {
  std::vector<double> levels;   // simulation levels (size 1 for single runs)
  double kappa = 1.0;           // θ-scale applied to levels
  int k_scale = 1;              // mass rescale divisor for measure views
  std::string family_id = "custom";
  SeedSpec seed;
  FlowState initial;
  std::vector<FlowEvent> events;
  double horizon = 0.0;
  std::vector<std::int64_t> terminal;
  std::uint64_t noop_count = 0;

  static void apply(const FlowEvent& ev, std::span<std::int64_t> counts) {
    if (ev.kind == EventKind::birth) {
      for (std::int32_t j = ev.first_level; j <= ev.last_level; ++j)
        counts[static_cast<std::size_t>(j)] += ev.offspring - 1;
    } else {
      for (std::int32_t j = ev.first_level; j <= ev.last_level; ++j)
        counts[static_cast<std::size_t>(j)] -= 1;
    }
  }

  /// Re-derives the terminal state from the event log.
  std::vector<std::int64_t> replay() const {
    std::vector<std::int64_t> counts = initial.counts;
    for (const auto& ev : events) apply(ev, counts);
    return counts;
  }
};

}  // namespace bflow

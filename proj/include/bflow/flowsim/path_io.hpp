#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bflow/flowsim/path.hpp"

namespace bflow {

struct path_format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Line format, one record per accepted event:
///   t kind theta u z j0 j1
/// with a versioned header carrying grid, θ-scale, seeds and family id.
inline void write_path(std::ostream& os, const FlowPath& path) {
  os << "# bflow-path v1\n";
  os << "# family " << path.family_id << " sigma-scale " << path.k_scale
     << " kappa " << detail::fmt_double(path.kappa) << "\n";
  os << "# grid";
  for (double q : path.levels) os << ' ' << detail::fmt_double(q);
  os << "\n# seed " << path.seed.master_seed << ' ' << path.seed.replica_index << "\n";
  os << "# horizon " << detail::fmt_double(path.horizon) << "\n";
  os << "# x0";
  for (auto c : path.initial.counts) os << ' ' << c;
  os << "\n";
  for (const auto& ev : path.events) {
    os << detail::fmt_double(ev.time) << ' ' << (ev.kind == EventKind::birth ? 'B' : 'D') << ' '
       << detail::fmt_double(ev.theta) << ' ' << detail::fmt_double(ev.u) << ' ' << ev.offspring
       << ' ' << ev.first_level << ' ' << ev.last_level << "\n";
  }
  os << "# terminal";
  for (auto c : path.terminal) os << ' ' << c;
  os << "\n# noops " << path.noop_count << "\n";
}

inline std::string path_to_string(const FlowPath& path) {
  std::ostringstream oss;
  write_path(oss, path);
  return oss.str();
}

inline FlowPath read_path(std::istream& is) {
  FlowPath path;
  path.levels.clear();
  std::string line;
  if (!std::getline(is, line) || line != "# bflow-path v1")
    throw path_format_error("read_path: missing or unsupported header");
  bool got_terminal = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "family") {
        std::string dummy;
        ls >> path.family_id >> dummy >> path.k_scale >> dummy >> path.kappa;
      } else if (key == "grid") {
        double q;
        while (ls >> q) path.levels.push_back(q);
      } else if (key == "seed") {
        ls >> path.seed.master_seed >> path.seed.replica_index;
      } else if (key == "horizon") {
        ls >> path.horizon;
      } else if (key == "x0") {
        std::int64_t c;
        while (ls >> c) path.initial.counts.push_back(c);
      } else if (key == "terminal") {
        std::int64_t c;
        while (ls >> c) path.terminal.push_back(c);
        got_terminal = true;
      } else if (key == "noops") {
        ls >> path.noop_count;
      }
      continue;
    }
    std::istringstream ls(line);
    FlowEvent ev;
    char kind;
    if (!(ls >> ev.time >> kind >> ev.theta >> ev.u >> ev.offspring >> ev.first_level >>
          ev.last_level))
      throw path_format_error("read_path: malformed event line: " + line);
    ev.kind = (kind == 'B') ? EventKind::birth : EventKind::death;
    path.events.push_back(ev);
  }
  if (path.levels.empty() || path.initial.counts.size() != path.levels.size() || !got_terminal)
    throw path_format_error("read_path: incomplete header");
  return path;
}

struct PathVerifyReport {
  bool replay_ok = false;      // replaying events reproduces the recorded terminal
  bool monotone_ok = false;    // level ordering holds after every event
  bool times_ok = false;       // event times strictly increase within the horizon
  bool ok() const { return replay_ok && monotone_ok && times_ok; }
};

inline PathVerifyReport verify_path(const FlowPath& path) {
  PathVerifyReport rep;
  std::vector<std::int64_t> counts = path.initial.counts;
  rep.monotone_ok = true;
  rep.times_ok = true;
  double prev_t = 0.0;
  for (const auto& ev : path.events) {
    if (!(ev.time > prev_t) || ev.time >= path.horizon) rep.times_ok = false;
    prev_t = ev.time;
    if (ev.first_level < 0 || ev.last_level >= static_cast<std::int32_t>(counts.size()) ||
        ev.first_level > ev.last_level) {
      rep.monotone_ok = false;
      break;
    }
    FlowPath::apply(ev, counts);
    std::int64_t prev = 0;
    for (std::int64_t c : counts) {
      if (c < prev || c < 0) rep.monotone_ok = false;
      prev = c;
    }
  }
  rep.replay_ok = (counts == path.terminal);
  return rep;
}

/// Walks the event log and returns the state at each query time (sorted).
inline std::vector<std::vector<std::int64_t>> states_at(const FlowPath& path,
                                                        const std::vector<double>& times) {
  std::vector<std::vector<std::int64_t>> out;
  out.reserve(times.size());
  std::vector<std::int64_t> counts = path.initial.counts;
  std::size_t ei = 0;
  for (double t : times) {
    while (ei < path.events.size() && path.events[ei].time <= t) {
      FlowPath::apply(path.events[ei], counts);
      ++ei;
    }
    out.push_back(counts);
  }
  return out;
}

/// CSV of level trajectories at the given times: one row per (replica, time,
/// level), mass rescaled by each path's k.
inline void write_trajectories_csv(std::ostream& os, std::span<const FlowPath> paths,
                                   const std::vector<double>& times) {
  os << "replica,t,level,q,count,y\n";
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& p = paths[r];
    const auto states = states_at(p, times);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      for (std::size_t j = 0; j < p.levels.size(); ++j) {
        os << p.seed.replica_index << ',' << detail::fmt_double(times[ti]) << ',' << j << ','
           << detail::fmt_double(p.levels[j]) << ',' << states[ti][j] << ','
           << detail::fmt_double(static_cast<double>(states[ti][j]) /
                                 static_cast<double>(p.k_scale))
           << "\n";
      }
    }
  }
}

}  // namespace bflow

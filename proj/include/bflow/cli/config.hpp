#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bflow/cumulant/solvers.hpp"
#include "bflow/experiments/report.hpp"
#include "bflow/flowsim/flow.hpp"
#include "bflow/mechanisms/mechanism.hpp"

namespace bflow {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FSpecConfig {
  std::string id;
  std::string kind = "joint";        // joint | values
  std::vector<double> levels;        // joint: transform levels a_i
  std::vector<double> lambdas;       // joint: coefficients λ_i
  std::vector<double> values;        // values: f at the flow levels
};

/// Parsed experiment configuration. Sections: [family], [experiment], [f]
/// (repeatable), [law], [flow], [solver], [simulate]. Unknown sections or
/// keys are errors; there are no silent defaults for misspelled names.
struct ExperimentConfig {
  FamilyParams family;
  bool has_family = false;

  std::vector<int> k_list;
  std::vector<double> levels;
  std::vector<double> y0;
  std::vector<double> t_list{1.0};
  std::vector<double> lambdas{1.0};
  std::size_t replicas = 100000;
  std::uint64_t master_seed = 1;
  int workers = 0;
  std::string out_dir = "out";
  double slack_c = 2.0;
  bool slack_auto = false;
  std::vector<int> pilot_k;
  std::size_t pilot_replicas = 20000;
  double mech_l = 5.0;
  int mech_grid = 101;

  std::vector<FSpecConfig> fs;

  std::vector<double> law_probs;
  double law_sigma = 1.0;
  std::int64_t law_x0 = 1;

  int flow_k = 0;                      // recipe scale; 0 = not set
  std::vector<std::int64_t> flow_x0;   // optional explicit counts
  std::size_t marginal_level = 0;      // level index for the coupling check

  OdeConfig ode{1e-3, 100.0};
  std::size_t grid_m = 200;
  std::uint64_t event_cap = 100'000'000;
  int sampler_cells = 100;

  std::vector<double> s_points{0.2, 0.5, 0.8};
  std::size_t dump_paths = 0;

  std::string canonical_string() const;
  std::uint64_t hash() const { return fnv1a(canonical_string()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_num(const std::string& v, const std::string& key) {
  std::istringstream ss(v);
  T out;
  ss >> out;
  if (ss.fail() || !(ss >> std::ws).eof())
    throw config_error("config: bad numeric value for '" + key + "': " + v);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& v, const std::string& key) {
  std::istringstream ss(v);
  std::vector<T> out;
  T x;
  while (ss >> x) out.push_back(x);
  if (!ss.eof()) throw config_error("config: bad list for '" + key + "': " + v);
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  FSpecConfig* cur_f = nullptr;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error("config: malformed section at line " +
                                                 std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section == "f") {
        cfg.fs.emplace_back();
        cur_f = &cfg.fs.back();
        cur_f->id = "f" + std::to_string(cfg.fs.size());
      } else if (section != "family" && section != "experiment" && section != "law" &&
                 section != "flow" && section != "solver" && section != "simulate") {
        throw config_error("config: unknown section [" + section + "]");
      }
      if (section == "family") cfg.has_family = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    using detail::parse_list;
    using detail::parse_num;

    if (section == "family") {
      if (key == "name") cfg.family = (value == "feller") ? feller_params()
                                      : (value == "nonlocal") ? nonlocal_params()
                                                              : FamilyParams{value};
      else if (key == "b0") cfg.family.b0 = parse_num<double>(value, key);
      else if (key == "c") cfg.family.c = parse_num<double>(value, key);
      else if (key == "gamma_m") cfg.family.gamma_m = parse_num<double>(value, key);
      else if (key == "rho_m") cfg.family.rho_m = parse_num<double>(value, key);
      else if (key == "h") cfg.family.h = parse_num<double>(value, key);
      else if (key == "gamma") cfg.family.gamma = parse_num<double>(value, key);
      else if (key == "rho") cfg.family.rho = parse_num<double>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [family]");
    } else if (section == "experiment") {
      if (key == "k_list") cfg.k_list = parse_list<int>(value, key);
      else if (key == "levels") cfg.levels = parse_list<double>(value, key);
      else if (key == "y0") cfg.y0 = parse_list<double>(value, key);
      else if (key == "t_list") cfg.t_list = parse_list<double>(value, key);
      else if (key == "lambdas") cfg.lambdas = parse_list<double>(value, key);
      else if (key == "replicas") cfg.replicas = parse_num<std::size_t>(value, key);
      else if (key == "master_seed") cfg.master_seed = parse_num<std::uint64_t>(value, key);
      else if (key == "workers") cfg.workers = parse_num<int>(value, key);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "slack_c") {
        if (value == "auto") cfg.slack_auto = true;
        else cfg.slack_c = parse_num<double>(value, key);
      }
      else if (key == "pilot_k") cfg.pilot_k = parse_list<int>(value, key);
      else if (key == "pilot_replicas") cfg.pilot_replicas = parse_num<std::size_t>(value, key);
      else if (key == "mech_l") cfg.mech_l = parse_num<double>(value, key);
      else if (key == "mech_grid") cfg.mech_grid = parse_num<int>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [experiment]");
    } else if (section == "f") {
      if (cur_f == nullptr) throw config_error("config: key outside [f] section");
      if (key == "id") cur_f->id = value;
      else if (key == "kind") cur_f->kind = value;
      else if (key == "levels") cur_f->levels = parse_list<double>(value, key);
      else if (key == "lambdas") cur_f->lambdas = parse_list<double>(value, key);
      else if (key == "values") cur_f->values = parse_list<double>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [f]");
    } else if (section == "law") {
      if (key == "probs") cfg.law_probs = parse_list<double>(value, key);
      else if (key == "sigma") cfg.law_sigma = parse_num<double>(value, key);
      else if (key == "x0") cfg.law_x0 = parse_num<std::int64_t>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [law]");
    } else if (section == "flow") {
      if (key == "k") cfg.flow_k = parse_num<int>(value, key);
      else if (key == "x0") cfg.flow_x0 = parse_list<std::int64_t>(value, key);
      else if (key == "marginal_level") cfg.marginal_level = parse_num<std::size_t>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [flow]");
    } else if (section == "solver") {
      if (key == "step") cfg.ode.step = parse_num<double>(value, key);
      else if (key == "max_time") cfg.ode.max_time = parse_num<double>(value, key);
      else if (key == "grid_m") cfg.grid_m = parse_num<std::size_t>(value, key);
      else if (key == "event_cap") cfg.event_cap = parse_num<std::uint64_t>(value, key);
      else if (key == "sampler_cells") cfg.sampler_cells = parse_num<int>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [solver]");
    } else if (section == "simulate") {
      if (key == "s_points") cfg.s_points = parse_list<double>(value, key);
      else if (key == "dump_paths") cfg.dump_paths = parse_num<std::size_t>(value, key);
      else throw config_error("config: unknown key '" + key + "' in [simulate]");
    } else {
      throw config_error("config: key '" + key + "' outside any section");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("config: cannot open " + path);
  return parse_config(is);
}

inline std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  auto num = [](double v) { return detail::num(v); };
  os << "family:" << family.name << ',' << num(family.b0) << ',' << num(family.c) << ','
     << num(family.gamma_m) << ',' << num(family.rho_m) << ',' << num(family.h) << ','
     << num(family.gamma) << ',' << num(family.rho) << ';';
  os << "k:";
  for (int k : k_list) os << k << ' ';
  os << ";levels:";
  for (double v : levels) os << num(v) << ' ';
  os << ";y0:";
  for (double v : y0) os << num(v) << ' ';
  os << ";t:";
  for (double v : t_list) os << num(v) << ' ';
  os << ";lambdas:";
  for (double v : lambdas) os << num(v) << ' ';
  os << ";replicas:" << replicas << ";seed:" << master_seed;
  os << ";slack:" << (slack_auto ? std::string("auto") : num(slack_c));
  os << ";pilot_k:";
  for (int k : pilot_k) os << k << ' ';
  os << ";pilot_replicas:" << pilot_replicas;
  os << ";mech:" << num(mech_l) << ',' << mech_grid;
  for (const auto& f : fs) {
    os << ";f:" << f.id << ',' << f.kind << ",levels=";
    for (double v : f.levels) os << num(v) << ' ';
    os << ",lambdas=";
    for (double v : f.lambdas) os << num(v) << ' ';
    os << ",values=";
    for (double v : f.values) os << num(v) << ' ';
  }
  os << ";law:";
  for (double v : law_probs) os << num(v) << ' ';
  os << ',' << num(law_sigma) << ',' << law_x0;
  os << ";flow:" << flow_k << ",x0=";
  for (auto v : flow_x0) os << v << ' ';
  os << ",marginal=" << marginal_level;
  os << ";solver:" << num(ode.step) << ',' << grid_m << ',' << event_cap << ','
     << sampler_cells;
  os << ";s:";
  for (double v : s_points) os << num(v) << ' ';
  os << ";dump:" << dump_paths;
  return os.str();
}

/// Resolves the f-specs into per-level step values on the experiment grid.
inline std::vector<ExperimentFSpec> resolve_f_specs(const ExperimentConfig& cfg) {
  if (cfg.levels.empty()) throw config_error("config: [experiment] levels are required");
  std::vector<ExperimentFSpec> out;
  for (const auto& f : cfg.fs) {
    ExperimentFSpec spec;
    spec.id = f.id;
    if (f.kind == "joint") {
      const auto& at = f.levels.empty() ? cfg.levels : f.levels;
      if (at != cfg.levels)
        throw config_error("config: [f] joint levels must equal the experiment levels");
      if (f.lambdas.size() != at.size())
        throw config_error("config: [f] joint needs one lambda per level");
      spec.f_levels = joint_transform_levels(at, f.lambdas);
    } else if (f.kind == "values") {
      if (f.values.size() != cfg.levels.size())
        throw config_error("config: [f] values must match the experiment levels");
      spec.f_levels = f.values;
    } else {
      throw config_error("config: [f] unknown kind '" + f.kind + "'");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace bflow

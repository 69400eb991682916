#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t replicas = -1;
  std::int64_t seed = -1;
  int workers = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--out-dir", args.out_dir, "override [experiment] out_dir");
  cmd->add_option("--replicas", args.replicas, "override [experiment] replicas");
  cmd->add_option("--seed", args.seed, "override [experiment] master_seed");
  cmd->add_option("--workers", args.workers, "override [experiment] workers");
}

bflow::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  bflow::ExperimentConfig cfg = bflow::load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (const char* env = std::getenv("BFLOW_OUT_DIR"); env && *env) cfg.out_dir = env;
  if (args.replicas >= 0) cfg.replicas = static_cast<std::size_t>(args.replicas);
  if (args.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(args.seed);
  if (args.workers >= 0) cfg.workers = args.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branching-flow simulation and scaling-limit verification"};
  app.require_subcommand(1);

  CommonArgs mech_args, ode_args, sim_args, flow_args, conv_args;
  std::vector<std::string> verify_files;

  add_common(app.add_subcommand("mech", "discretize a family and audit mechanism convergence"),
             mech_args);
  add_common(app.add_subcommand("ode", "export deterministic oracle tables"), ode_args);
  add_common(app.add_subcommand("simulate", "single-process Monte Carlo audits"), sim_args);
  add_common(app.add_subcommand("flow", "coupled-flow Monte Carlo audits"), flow_args);
  add_common(app.add_subcommand("converge", "full scaling-limit comparison"), conv_args);
  app.add_subcommand("verify", "re-check recorded path files")
      ->add_option("files", verify_files, "path files")
      ->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("mech"))
      return bflow::cli::cmd_mech(load_with_overrides(mech_args), std::cout);
    if (app.got_subcommand("ode"))
      return bflow::cli::cmd_ode(load_with_overrides(ode_args), std::cout);
    if (app.got_subcommand("simulate"))
      return bflow::cli::cmd_simulate(load_with_overrides(sim_args), std::cout);
    if (app.got_subcommand("flow"))
      return bflow::cli::cmd_flow(load_with_overrides(flow_args), std::cout);
    if (app.got_subcommand("converge"))
      return bflow::cli::cmd_converge(load_with_overrides(conv_args), std::cout);
    if (app.got_subcommand("verify")) return bflow::cli::cmd_verify(verify_files, std::cout);
  } catch (const bflow::resource_error& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

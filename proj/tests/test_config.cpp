#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "bflow/cli/config.hpp"

using namespace bflow;

namespace {

const char* kSample = R"(
# comment
[family]
name = nonlocal
rho = 2.0

[experiment]
k_list = 25 50
levels = 0.5 1.0
y0 = 0.5 1.0
t_list = 0.0 1.0
replicas = 5000
master_seed = 42
slack_c = auto
pilot_k = 10

[f]
id = joint11
kind = joint
levels = 0.5 1.0
lambdas = 1.0 1.0
)";

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream is(kSample);
  const ExperimentConfig cfg = parse_config(is);
  CHECK(cfg.family.name == "nonlocal");
  CHECK(cfg.family.h == 0.5);   // preset value
  CHECK(cfg.family.rho == 2.0); // overridden after the preset
  CHECK(cfg.k_list == std::vector<int>{25, 50});
  CHECK(cfg.replicas == 5000);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.slack_auto);
  CHECK(cfg.pilot_k == std::vector<int>{10});
  REQUIRE(cfg.fs.size() == 1);
  CHECK(cfg.fs[0].id == "joint11");

  const auto specs = resolve_f_specs(cfg);
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].f_levels == std::vector<double>{2.0, 1.0});
}

TEST_CASE("unknown keys and sections are errors") {
  std::istringstream bad_key("[family]\nnames = feller\n");
  CHECK_THROWS_AS(parse_config(bad_key), config_error);
  std::istringstream bad_section("[familly]\nname = feller\n");
  CHECK_THROWS_AS(parse_config(bad_section), config_error);
  std::istringstream no_section("name = feller\n");
  CHECK_THROWS_AS(parse_config(no_section), config_error);
  std::istringstream bad_value("[experiment]\nreplicas = many\n");
  CHECK_THROWS_AS(parse_config(bad_value), config_error);
}

TEST_CASE("config hash is stable and value sensitive") {
  std::istringstream a(kSample), b(kSample);
  const ExperimentConfig ca = parse_config(a);
  ExperimentConfig cb = parse_config(b);
  CHECK(ca.hash() == cb.hash());
  cb.replicas += 1;
  CHECK(ca.hash() != cb.hash());
}

TEST_CASE("f-spec validation") {
  ExperimentConfig cfg;
  cfg.levels = {0.5, 1.0};
  FSpecConfig f;
  f.kind = "values";
  f.values = {1.0};  // wrong arity
  cfg.fs.push_back(f);
  CHECK_THROWS_AS(resolve_f_specs(cfg), config_error);
  cfg.fs[0].kind = "nope";
  cfg.fs[0].values = {1.0, 2.0};
  CHECK_THROWS_AS(resolve_f_specs(cfg), config_error);
  cfg.fs[0].kind = "joint";
  cfg.fs[0].levels = {0.25, 1.0};  // does not match the experiment levels
  cfg.fs[0].lambdas = {1.0, 1.0};
  CHECK_THROWS_AS(resolve_f_specs(cfg), config_error);
}

TEST_CASE("sample configs on disk parse") {
  for (const char* name :
       {"feller_converge.ini", "nonlocal_converge.ini", "critical_simulate.ini",
        "flow_demo.ini", "mech_catalog.ini"}) {
    const ExperimentConfig cfg = load_config(std::string(BFLOW_CONFIG_DIR) + "/" + name);
    CHECK(cfg.hash() != 0);
  }
}

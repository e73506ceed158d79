#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "mfglab/config.hpp"

using namespace mfglab;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "t",
    "domain": {"kind": "interval", "a": -1.0, "b": 1.0},
    "model": {
      "lagrangian": {"kind": "quadratic", "potential": "zero"},
      "coupling": {"form": "kernel", "sigma": 0.25},
      "terminal": "linear:a=[1]"
    },
    "m0": {"kind": "grid", "count": 8},
    "time": {"T": 1.0, "nodes": 41},
    "solver": {"tol": 1e-8},
    "fixed_point": {"tol": 1e-2, "k_max": 50, "init": "free_flow"},
    "panels": ["hjb"],
    "output_dir": "out/t",
    "seed": 3
  })");
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("well-formed config parses into a runnable scenario") {
  RunConfig cfg = parse_config(base_config());
  CHECK(cfg.name == "t");
  CHECK(cfg.scenario.dom.dim() == 1);
  CHECK(cfg.scenario.time_nodes == 41);
  CHECK(cfg.scenario.coupling.form == Coupling::Form::Kernel);
  CHECK(cfg.scenario.terminal.value(Vec(0.3)) == doctest::Approx(0.3));
  CHECK(cfg.m0.size() == 8);
  CHECK(cfg.m0.weights[0] == doctest::Approx(0.125));
  CHECK(cfg.fp.tol == doctest::Approx(1e-2));
  CHECK(cfg.fp.max_iters == 50);
  CHECK(cfg.fp.init == EquilibriumOptions::Init::FreeFlow);
  CHECK(cfg.fp.seed == 3);
  CHECK(cfg.solver_tol == doctest::Approx(1e-8));
  CHECK(cfg.panels == std::vector<std::string>{"hjb"});
  // Grid particles are strictly interior and sorted.
  for (const Vec& p : cfg.m0.points) CHECK(std::abs(p[0]) < 1.0);
}

TEST_CASE("2d domains and field kinds") {
  json j = base_config();
  j["domain"] = {{"kind", "disk"}, {"center", {0.0, 0.0}}, {"radius", 1.0}};
  j["model"]["lagrangian"] = {{"kind", "drift_quadratic"}, {"drift", {-0.5, 0.1}},
                              {"potential", {{"kind", "quadratic_well"},
                                             {"strength", 0.3},
                                             {"center", {0.2, 0.0}}}}};
  j["model"]["terminal"] = {{"kind", "linear"}, {"a", {0.4, 0.0}}};
  j["m0"] = {{"kind", "grid"}, {"count", 12}};
  RunConfig cfg = parse_config(j);
  CHECK(cfg.scenario.dom.dim() == 2);
  CHECK(cfg.m0.size() <= 12);
  for (const Vec& p : cfg.m0.points) CHECK(contains(cfg.scenario.dom, p));
  CHECK(cfg.scenario.lagrangian.kind == LagrangianSpec::Kind::DriftQuadratic);
}

TEST_CASE("errors name the offending field path") {
  json j = base_config();
  j["time"]["nodes"] = 1;
  CHECK(error_of(j).find("time.nodes") != std::string::npos);

  j = base_config();
  j["domain"].erase("a");
  CHECK(error_of(j).find("domain.a") != std::string::npos);

  j = base_config();
  j["model"]["coupling"]["form"] = "pairwise";
  CHECK(error_of(j).find("model.coupling.form") != std::string::npos);

  j = base_config();
  j["model"]["coupling"]["sigma"] = -0.5;
  CHECK(error_of(j).find("model.coupling.sigma") != std::string::npos);

  j = base_config();
  j["model"]["terminal"] = "linear:a=[";
  CHECK(error_of(j).find("model.terminal") != std::string::npos);

  j = base_config();
  j["fixed_point"]["init"] = "warm";
  CHECK(error_of(j).find("fixed_point.init") != std::string::npos);

  j = base_config();
  j["m0"] = {{"kind", "uniform_random"}, {"count", 5}, {"seed", 2}};
  j.erase("seed");
  CHECK(error_of(j).find("seed") != std::string::npos);

  j = base_config();
  j["schema_version"] = 2;
  CHECK(error_of(j).find("schema_version") != std::string::npos);
}

TEST_CASE("m0 variants") {
  json j = base_config();
  j["m0"] = {{"kind", "list"}, {"points", {{-0.5}, {0.0}, {0.5}}}};
  RunConfig cfg = parse_config(j);
  REQUIRE(cfg.m0.size() == 3);
  CHECK(cfg.m0.points[1][0] == doctest::Approx(0.0));

  j["m0"] = {{"kind", "uniform_random"}, {"count", 20}, {"seed", 9}};
  RunConfig r1 = parse_config(j);
  RunConfig r2 = parse_config(j);
  REQUIRE(r1.m0.size() == 20);
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(r1.m0.points[i][0] == r2.m0.points[i][0]);  // seeded, reproducible
}

TEST_CASE("canonical form round-trips") {
  json j = base_config();
  j.erase("panels");
  j.erase("output_dir");
  RunConfig cfg = parse_config(j);
  CHECK(cfg.panels == std::vector<std::string>{"hjb", "continuity", "lambda-plus"});
  // Re-parsing the canonical form reproduces the same normalized config.
  RunConfig cfg2 = parse_config(cfg.canonical);
  CHECK(cfg2.canonical == cfg.canonical);
  CHECK(cfg2.panels == cfg.panels);
  CHECK(cfg2.seed == cfg.seed);
}

TEST_CASE("shipped configs load") {
  const char* dir = std::getenv("MFGLAB_CONFIG_DIR");
  std::string root = dir ? dir : "configs";
  for (const char* name : {"decoupled-1d", "monotone-kernel-1d", "drift-kernel-1d",
                           "disk-drift-2d"}) {
    RunConfig cfg = load_config(root + "/" + name + ".json");
    CHECK(cfg.name == name);
    CHECK(cfg.m0.size() >= 8);
  }
  CHECK_THROWS_AS(load_config(root + "/does-not-exist.json"), ConfigError);
}

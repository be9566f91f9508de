#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "conley/runner.hpp"

using namespace conley;

namespace {

json scrub_timing(json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST_CASE("catalog scenarios load and validate") {
  for (const char* name : {"repeller", "attractor", "saddle", "torus", "annulus"}) {
    const auto sc = catalog_scenario(name);
    REQUIRE(sc.name == name);
    REQUIRE(static_cast<int>(sc.resolution.size()) == sc.dimension);
  }
  REQUIRE_THROWS_AS(catalog_scenario("frobnicator"), ConfigError);
}

TEST_CASE("config validation: resolution floor") {
  json j = json::parse(catalog_sources().at("repeller"));
  j["resolution"] = {0};
  try {
    scenario_from_json(j);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("resolution must be >= 2") != std::string::npos);
  }
}

TEST_CASE("config validation: unknown keys are named") {
  json j = json::parse(catalog_sources().at("repeller"));
  j["tolerence"] = 0.1;
  try {
    scenario_from_json(j);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("tolerence") != std::string::npos);
  }
  json j2 = json::parse(catalog_sources().at("repeller"));
  j2["tolerances"]["epsilonn"] = 0.1;
  REQUIRE_THROWS_AS(scenario_from_json(j2), ConfigError);
}

TEST_CASE("config validation: field errors") {
  json j = json::parse(catalog_sources().at("repeller"));
  j["gradient_mode"] = "sideways";
  REQUIRE_THROWS_AS(scenario_from_json(j), ConfigError);
  json j2 = json::parse(catalog_sources().at("repeller"));
  j2["pair"] = {{"source", "explicit"}, {"n_cells", "/nonexistent.csv"}, {"l_cells", "/n.csv"}};
  REQUIRE_THROWS_AS(scenario_from_json(j2), ConfigError);
  json j3 = json::parse(catalog_sources().at("repeller"));
  j3["checks"] = {"index-pair", "frobnicate"};
  REQUIRE_THROWS_AS(scenario_from_json(j3), ConfigError);
}

TEST_CASE("config files round-trip through the loader") {
  const std::string path = "/tmp/conley_test_config.json";
  {
    std::ofstream f(path);
    f << catalog_sources().at("repeller");
  }
  const auto sc = load_config(path);
  REQUIRE(sc.name == "repeller");
  REQUIRE(sc.resolution == std::vector<int>{256});
  REQUIRE_THROWS_AS(load_config("/does/not/exist.json"), ConfigError);
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  REQUIRE_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("explicit cell-set pairs run through the pipeline") {
  // Dump the repeller pair, reload it as an explicit config, and check the
  // index pair stage reproduces the axioms.
  const auto sc = catalog_scenario("repeller");
  auto grid = std::make_shared<CubicalGrid>(sc.domain, sc.resolution);
  auto f = std::make_shared<ScalarField>(sc.objective, sc.domain);
  PseudoGradientField y(f, GradientMode::raw);
  CellSet a = CellSet::full(grid);
  CellSet g = compute_trapped_set(y, a, sc.pair.T, sc.integrator);
  CellSet gamma = compute_exit_slice(y, a, g, sc.pair.T, sc.integrator);
  {
    std::ofstream nf("/tmp/conley_n.csv"), lf("/tmp/conley_l.csv");
    dump_cells_csv(nf, g);
    dump_cells_csv(lf, gamma);
  }
  json j = json::parse(catalog_sources().at("repeller"));
  j["pair"] = {{"source", "explicit"},
               {"n_cells", "/tmp/conley_n.csv"},
               {"l_cells", "/tmp/conley_l.csv"},
               {"horizon", 1.0}};
  const auto sc2 = scenario_from_json(j);
  RunOptions opt;
  opt.subcommand = "index-pair";
  const auto out = run_scenario(sc2, opt);
  REQUIRE(out.exit_code == 0);
  REQUIRE(out.report["results"]["index_pair"]["axiom_ii"]["verdict"] == "pass");
}

TEST_CASE("reports are deterministic across runs and worker caps") {
  const auto sc = catalog_scenario("repeller");
  RunOptions a;
  a.subcommand = "all";
  a.threads = 1;
  a.seed = 7;
  const auto first = run_scenario(sc, a);
  const auto second = run_scenario(sc, a);
  REQUIRE(scrub_timing(first.report).dump() == scrub_timing(second.report).dump());

  RunOptions b = a;
  b.threads = 2;
  const auto wide = run_scenario(sc, b);
  REQUIRE(scrub_timing(first.report).dump() == scrub_timing(wide.report).dump());
}

TEST_CASE("seed is echoed and changes the sampling") {
  const auto sc = catalog_scenario("repeller");
  RunOptions a;
  a.subcommand = "deform";
  a.seed = 1;
  RunOptions b = a;
  b.seed = 2;
  const auto ra = run_scenario(sc, a);
  const auto rb = run_scenario(sc, b);
  REQUIRE(ra.report["seed"] == 1);
  REQUIRE(rb.report["seed"] == 2);
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
}

TEST_CASE("failures yield partial reports with the error recorded") {
  // The untilted ring has a degenerate critical circle; the bound stage
  // rejects it but everything computed before it survives in the report.
  json j = json::parse(catalog_sources().at("annulus"));
  j["objective"] = "(x0^2 + x1^2 - 1)^2";
  j["checks"] = {"cohomology", "bound"};
  const auto sc = scenario_from_json(j);
  RunOptions opt;
  opt.subcommand = "all";
  const auto out = run_scenario(sc, opt);
  REQUIRE(out.exit_code == 1);
  REQUIRE(out.report["status"] == "fail");
  REQUIRE(out.report["results"].contains("cohomology"));
  const std::string err = out.report["results"]["error"];
  REQUIRE(err.find("degenerate") != std::string::npos);
}

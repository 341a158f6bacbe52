#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "doccoord/cli.hpp"
#include "doccoord/errors.hpp"
#include "doccoord/scenario.hpp"

using namespace doccoord;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "doccoord_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = temp_dir() / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("builtin scenario parses and matches the benchmark data") {
  const ScenarioConfig cfg = ScenarioConfig::from_string(builtin_scenario_json());
  CHECK(cfg.graph.num_agents() == 5);
  CHECK(cfg.graph.edges().size() == 10);  // complete graph
  CHECK(cfg.model.n() == 2);
  CHECK(cfg.model.m() == 2);
  CHECK(cfg.bounds.alpha == 0.6);
  CHECK(cfg.bounds.beta == 1.0);
  CHECK(cfg.bounds.gamma == 0.5);
  CHECK(cfg.objectives.mu() == 1.0);
  CHECK(cfg.objectives.ell() == 1.1);
  CHECK(cfg.objectives.mu_prime() == doctest::Approx(1.0 / 11.0));
  REQUIRE(cfg.gains.has_value());
  CHECK(cfg.gains->K1(0, 0) == doctest::Approx(1.8386));
  CHECK(cfg.gains->K4(1, 1) == doctest::Approx(0.3012));
  CHECK(cfg.sim.t_final == 50.0);
  CHECK(cfg.sim.dt == 1e-3);
  CHECK(cfg.solver.rho == 0.1);
  // The checked-in file is the same document.
  CHECK(nlohmann::json::parse(builtin_scenario_json()) ==
        nlohmann::json::parse(slurp(fs::path(DOCCOORD_SOURCE_DIR) / "configs/paper_sec5.json")));
}

TEST_CASE("config validation diagnostics") {
  CHECK_THROWS_AS(ScenarioConfig::from_string("{ not json"), ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::from_string("[1,2,3]"), ConfigError);

  nlohmann::json j = nlohmann::json::parse(builtin_scenario_json());
  {
    nlohmann::json bad = j;
    bad.erase("graph");
    CHECK_THROWS_WITH_AS(ScenarioConfig::from_json(bad),
                         doctest::Contains("missing required field 'graph'"), ConfigError);
  }
  {
    nlohmann::json bad = j;
    bad["objectives"].erase(4);
    CHECK_THROWS_WITH_AS(ScenarioConfig::from_json(bad),
                         doctest::Contains("one objective per agent"), ConfigError);
  }
  {
    nlohmann::json bad = j;
    bad["nonlinearity"]["kind"] = "deadzone";
    CHECK_THROWS_WITH_AS(ScenarioConfig::from_json(bad),
                         doctest::Contains("unknown nonlinearity kind"), ConfigError);
  }
  {
    nlohmann::json bad = j;
    bad["agent"]["A"][0][1] = "x";
    CHECK_THROWS_WITH_AS(ScenarioConfig::from_json(bad), doctest::Contains("agent.A"),
                         ConfigError);
  }
  {
    nlohmann::json bad = j;
    bad["graph"]["edges"][0][2] = -2.0;
    CHECK_THROWS_AS(ScenarioConfig::from_json(bad), InvalidWeight);
  }
}

TEST_CASE("overrides") {
  Overrides ov;
  ov.dt = 5e-4;
  ov.seed = 99;
  ov.gamma = 0.4;
  ScenarioConfig cfg = apply_overrides(ScenarioConfig::from_string(builtin_scenario_json()), ov);
  CHECK(cfg.sim.dt == 5e-4);
  CHECK(cfg.sim.rng_seed == 99);
  CHECK(cfg.bounds.gamma == 0.4);
  // The rewrapped map still evaluates the same nonlinearity.
  const Eigen::VectorXd y =
      cfg.nonlinearities[0].apply(Eigen::VectorXd::Ones(2), 0.0);
  CHECK(y(0) == doctest::Approx(0.8));

  Overrides short_run;
  short_run.t_final = 5.0;
  ScenarioConfig cfg2 =
      apply_overrides(ScenarioConfig::from_string(builtin_scenario_json()), short_run);
  CHECK(cfg2.sim.t_final == 5.0);
  CHECK(cfg2.sim.tail_end <= 5.0);
  CHECK(cfg2.sim.tail_start < cfg2.sim.tail_end);
}

TEST_CASE("cmd_verify exit codes and report schema") {
  const fs::path out = temp_dir() / "verify_out";
  Overrides ov;
  ov.output_dir = out.string();

  const fs::path good = write_file("good.json", builtin_scenario_json());
  CHECK(cli::cmd_verify(good.string(), ov) == cli::kExitPass);
  const nlohmann::json rep = nlohmann::json::parse(slurp(out / "verify_report.json"));
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("lambda_min_P").get<double>() > 1e-9);
  CHECK(rep.at("rho_certified").get<double>() > 0.0);
  CHECK(rep.at("epsilon").get<double>() > 1e2);
  CHECK(rep.at("epsilon").get<double>() < 1e7);
  CHECK(rep.at("blocks").size() >= 3);
  const auto xs = rep.at("x_star").get<std::vector<double>>();
  CHECK(xs[0] == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(xs[1] == doctest::Approx(0.5).epsilon(1e-10));

  // Declared gamma = 0.4 also verifies (smaller residual sector).
  Overrides ov04 = ov;
  ov04.gamma = 0.4;
  CHECK(cli::cmd_verify(good.string(), ov04) == cli::kExitPass);

  // Zero gains on an open-loop unstable plant: FAIL, not an error.
  nlohmann::json j = nlohmann::json::parse(builtin_scenario_json());
  for (auto key : {"K1", "K2", "K3", "K4"}) {
    j["gains"][key] = {{0.0, 0.0}, {0.0, 0.0}};
  }
  const fs::path zero = write_file("zero_gain.json", j.dump());
  CHECK(cli::cmd_verify(zero.string(), ov) == cli::kExitFail);

  // Malformed JSON is a configuration error.
  const fs::path bad = write_file("bad.json", "{ nope");
  CHECK(cli::cmd_verify(bad.string(), ov) == cli::kExitError);
  CHECK(cli::cmd_verify((temp_dir() / "missing.json").string(), ov) == cli::kExitError);
}

TEST_CASE("cmd_simulate writes trajectory and metrics") {
  const fs::path out = temp_dir() / "sim_out";
  Overrides ov;
  ov.output_dir = out.string();
  ov.t_final = 5.0;
  const fs::path good = write_file("sim.json", builtin_scenario_json());
  CHECK(cli::cmd_simulate(good.string(), ov) == cli::kExitPass);
  CHECK(fs::exists(out / "trajectory.csv"));
  const nlohmann::json m = nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(m.at("bound_satisfied").get<bool>());
  CHECK(m.at("max_v_sum").get<double>() <= 1e-6);
  CHECK(m.at("tail_sup_err").get<double>() < m.at("epsilon").get<double>());
}

TEST_CASE("cmd_reproduce is deterministic") {
  const fs::path out1 = temp_dir() / "rep1";
  const fs::path out2 = temp_dir() / "rep2";
  Overrides ov;
  ov.t_final = 5.0;
  ov.output_dir = out1.string();
  CHECK(cli::cmd_reproduce(ov) == cli::kExitPass);
  ov.output_dir = out2.string();
  CHECK(cli::cmd_reproduce(ov) == cli::kExitPass);
  CHECK(slurp(out1 / "reproduce" / "trajectory.csv") ==
        slurp(out2 / "reproduce" / "trajectory.csv"));
  CHECK(fs::exists(out1 / "reproduce" / "verify_report.json"));
  CHECK(fs::exists(out1 / "reproduce" / "metrics.json"));
}

TEST_CASE("DOC_COORD_OUT environment override") {
  const fs::path out = temp_dir() / "env_out";
  setenv("DOC_COORD_OUT", out.string().c_str(), 1);
  const fs::path good = write_file("env.json", builtin_scenario_json());
  Overrides ov;  // no explicit output dir
  CHECK(cli::cmd_verify(good.string(), ov) == cli::kExitPass);
  unsetenv("DOC_COORD_OUT");
  CHECK(fs::exists(out / "verify_report.json"));
}

TEST_CASE("graph file override") {
  nlohmann::json g;
  g["num_agents"] = 5;
  g["edges"] = {nlohmann::json::array({1, 2, 1.0}), nlohmann::json::array({2, 3, 1.0}),
                nlohmann::json::array({3, 4, 1.0}), nlohmann::json::array({4, 5, 1.0})};
  const fs::path gpath = write_file("path_graph.json", g.dump());
  Overrides ov;
  ov.graph_file = gpath.string();
  const ScenarioConfig cfg =
      apply_overrides(ScenarioConfig::from_string(builtin_scenario_json()), ov);
  CHECK(cfg.graph.edges().size() == 4);

  // Changing the agent count is rejected.
  g["num_agents"] = 4;
  g["edges"] = {nlohmann::json::array({1, 2, 1.0}), nlohmann::json::array({2, 3, 1.0}),
                nlohmann::json::array({3, 4, 1.0})};
  const fs::path gbad = write_file("small_graph.json", g.dump());
  Overrides ov2;
  ov2.graph_file = gbad.string();
  CHECK_THROWS_AS(apply_overrides(ScenarioConfig::from_string(builtin_scenario_json()), ov2),
                  ConfigError);
}

TEST_CASE("slope table nonlinearity from config") {
  nlohmann::json j = nlohmann::json::parse(builtin_scenario_json());
  j["nonlinearity"] = {{"kind", "slope_table"},
                       {"breakpoints", {-1.0, 1.0}},
                       {"slopes", {1.0, 0.7, 1.0}},
                       {"alpha", 0.7},
                       {"beta", 1.0}};
  const ScenarioConfig cfg = ScenarioConfig::from_json(j);
  CHECK(cfg.nonlinearities[0].kind() == "slope_table");
  // gamma defaults to the tight value (beta - alpha)/beta = 0.3.
  CHECK(cfg.bounds.gamma == doctest::Approx(0.3));
  const Eigen::VectorXd y = cfg.nonlinearities[0].apply(Eigen::VectorXd::Constant(2, 0.5), 0.0);
  CHECK(y(0) == doctest::Approx(0.35));
}

TEST_CASE("heterogeneous nonlinearity list") {
  nlohmann::json j = nlohmann::json::parse(builtin_scenario_json());
  nlohmann::json nl = j["nonlinearity"];
  j["nonlinearity"] = nlohmann::json::array({nl, nl, nl, nl, nl});
  const ScenarioConfig cfg = ScenarioConfig::from_json(j);
  CHECK(cfg.nonlinearities.size() == 5);

  j["nonlinearity"] = nlohmann::json::array({nl, nl});
  CHECK_THROWS_WITH_AS(ScenarioConfig::from_json(j),
                       doctest::Contains("one entry per agent"), ConfigError);
}

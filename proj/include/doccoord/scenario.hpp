#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "doccoord/graph.hpp"
#include "doccoord/nonlinearity.hpp"
#include "doccoord/objectives.hpp"
#include "doccoord/protocol.hpp"
#include "doccoord/simulator.hpp"

namespace doccoord {

struct SolverConfig {
  double rho = 0.1;              // requested margin for the ultimate-bound report
  double accept_margin = 1e-8;
  double pd_floor = 1e-6;
  double synthesis_margin = 0.05;
  double synthesis_q_floor = 0.1;
};

/// Everything a run needs, parsed and cross-validated from one JSON document.
struct ScenarioConfig {
  AgentModel model;
  std::vector<InputNonlinearity> nonlinearities;  // one shared or one per agent
  SectorBounds bounds;                            // of the first nonlinearity
  NetworkGraph graph;
  ObjectiveSet objectives;
  std::optional<GainSet> gains;
  SimConfig sim;
  SolverConfig solver;
  std::string output_dir = "out";

  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig from_file(const std::string& path);
  static ScenarioConfig from_string(const std::string& text);
};

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<std::string> graph_file;
  std::optional<std::string> output_dir;
};

ScenarioConfig apply_overrides(ScenarioConfig cfg, const Overrides& ov);

/// The bundled five-agent benchmark configuration (same content as
/// configs/paper_sec5.json, embedded at build time).
const std::string& builtin_scenario_json();

}  // namespace doccoord

#include "doccoord/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "doccoord/errors.hpp"

namespace doccoord {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(where + ": expected a 2-d array");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw ConfigError(where + ": ragged rows");
    }
    for (int c = 0; c < cols; ++c) {
      const auto& cell = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!cell.is_number()) throw ConfigError(where + ": non-numeric entry");
      M(r, c) = cell.get<double>();
    }
  }
  return M;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(where + ": non-numeric entry");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

InputNonlinearity parse_nonlinearity(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string kind = j.value("kind", std::string());
  SectorBounds b;
  b.alpha = j.value("alpha", 1.0);
  b.beta = j.value("beta", 1.0);
  b.gamma = j.contains("gamma") ? j.at("gamma").get<double>() : 0.0;
  if (kind == "identity") {
    return InputNonlinearity::identity();
  }
  if (kind == "sinusoidal_gain") {
    for (const char* key : {"base", "amp", "freq"}) {
      if (!j.contains(key)) throw ConfigError(where + ": sinusoidal_gain needs '" + key + "'");
    }
    if (!j.contains("gamma")) b.gamma = tight_gamma(b);
    return InputNonlinearity::sinusoidal_gain(j.at("base").get<double>(),
                                              j.at("amp").get<double>(),
                                              j.at("freq").get<double>(), b);
  }
  if (kind == "slope_table") {
    if (!j.contains("breakpoints") || !j.contains("slopes")) {
      throw ConfigError(where + ": slope_table needs 'breakpoints' and 'slopes'");
    }
    if (!j.contains("gamma")) b.gamma = tight_gamma(b);
    return InputNonlinearity::slope_table(j.at("breakpoints").get<std::vector<double>>(),
                                          j.at("slopes").get<std::vector<double>>(), b);
  }
  throw ConfigError(where + ": unknown nonlinearity kind '" + kind +
                    "' (expected identity, sinusoidal_gain or slope_table)");
}

NetworkGraph parse_graph(const json& j) {
  if (!j.is_object() || !j.contains("num_agents") || !j.contains("edges")) {
    throw ConfigError("graph: need 'num_agents' and 'edges'");
  }
  const int N = j.at("num_agents").get<int>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) {
      throw ConfigError("graph.edges: each edge must be [i, j, weight]");
    }
    edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  return NetworkGraph(N, std::move(edges));
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("top level must be a JSON object");
  for (const char* key : {"agent", "nonlinearity", "graph", "objectives"}) {
    if (!j.contains(key)) throw ConfigError(std::string("missing required field '") + key + "'");
  }

  const json& ja = j.at("agent");
  if (!ja.contains("A") || !ja.contains("B0")) throw ConfigError("agent: need 'A' and 'B0'");
  AgentModel model(parse_matrix(ja.at("A"), "agent.A"), parse_matrix(ja.at("B0"), "agent.B0"));

  NetworkGraph graph = parse_graph(j.at("graph"));

  std::vector<InputNonlinearity> nls;
  const json& jn = j.at("nonlinearity");
  if (jn.is_array()) {
    if (static_cast<int>(jn.size()) != graph.num_agents()) {
      throw ConfigError("nonlinearity list must have one entry per agent");
    }
    for (std::size_t k = 0; k < jn.size(); ++k) {
      nls.push_back(parse_nonlinearity(jn[k], "nonlinearity[" + std::to_string(k) + "]"));
    }
  } else {
    nls.push_back(parse_nonlinearity(jn, "nonlinearity"));
  }

  std::vector<std::shared_ptr<const Objective>> locals;
  for (const auto& jo : j.at("objectives")) {
    const std::string type = jo.value("type", "quadratic");
    if (type != "quadratic") {
      throw ConfigError("objectives: only 'quadratic' entries are accepted in config files");
    }
    locals.push_back(std::make_shared<QuadraticObjective>(
        parse_matrix(jo.at("Q"), "objectives[].Q"), parse_vector(jo.at("c"), "objectives[].c")));
  }
  if (static_cast<int>(locals.size()) != graph.num_agents()) {
    throw ConfigError("need exactly one objective per agent (" +
                      std::to_string(graph.num_agents()) + ")");
  }
  std::optional<double> mu, ell;
  if (j.contains("mu")) mu = j.at("mu").get<double>();
  if (j.contains("ell")) ell = j.at("ell").get<double>();
  ObjectiveSet objectives(std::move(locals), mu, ell);
  if (objectives.dim() != model.n()) {
    throw ConfigError("objective dimension must equal the agent state dimension");
  }

  std::optional<GainSet> gains;
  if (j.contains("gains")) {
    const json& jg = j.at("gains");
    GainSet g;
    g.K1 = parse_matrix(jg.at("K1"), "gains.K1");
    g.K2 = parse_matrix(jg.at("K2"), "gains.K2");
    g.K3 = parse_matrix(jg.at("K3"), "gains.K3");
    g.K4 = parse_matrix(jg.at("K4"), "gains.K4");
    g.validate(model.n(), model.m());
    gains = std::move(g);
  }

  SimConfig sim;
  if (j.contains("simulation")) {
    const json& js = j.at("simulation");
    sim.t_final = js.value("t_final", sim.t_final);
    sim.dt = js.value("dt", sim.dt);
    sim.record_stride = js.value("record_stride", sim.record_stride);
    sim.rng_seed = js.value("seed", sim.rng_seed);
    if (js.contains("tail_window")) {
      const auto& w = js.at("tail_window");
      if (!w.is_array() || w.size() != 2) throw ConfigError("simulation.tail_window: need [t_a, t_b]");
      sim.tail_start = w[0].get<double>();
      sim.tail_end = w[1].get<double>();
    }
    if (js.contains("initial_x")) {
      sim.initial_x = parse_vector(js.at("initial_x"), "simulation.initial_x");
    }
  }

  SolverConfig solver;
  if (j.contains("solver")) {
    const json& js = j.at("solver");
    solver.rho = js.value("rho", solver.rho);
    solver.accept_margin = js.value("accept_margin", solver.accept_margin);
    solver.pd_floor = js.value("pd_floor", solver.pd_floor);
    solver.synthesis_margin = js.value("synthesis_margin", solver.synthesis_margin);
    solver.synthesis_q_floor = js.value("synthesis_q_floor", solver.synthesis_q_floor);
  }

  const SectorBounds bounds = nls.front().bounds();
  return ScenarioConfig{std::move(model),      std::move(nls), bounds,
                        std::move(graph),      std::move(objectives), std::move(gains),
                        sim,                   solver,
                        j.value("output_dir", std::string("out"))};
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

ScenarioConfig ScenarioConfig::from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  return from_json(j);
}

ScenarioConfig apply_overrides(ScenarioConfig cfg, const Overrides& ov) {
  if (ov.dt) cfg.sim.dt = *ov.dt;
  if (ov.t_final) {
    cfg.sim.t_final = *ov.t_final;
    if (cfg.sim.tail_end > cfg.sim.t_final) {
      cfg.sim.tail_end = cfg.sim.t_final;
      cfg.sim.tail_start = std::min(cfg.sim.tail_start, 0.8 * cfg.sim.t_final);
    }
  }
  if (ov.seed) cfg.sim.rng_seed = *ov.seed;
  if (ov.gamma) {
    std::vector<InputNonlinearity> updated;
    for (const auto& nl : cfg.nonlinearities) {
      SectorBounds b = nl.bounds();
      b.gamma = *ov.gamma;
      if (nl.kind() == "identity") {
        updated.push_back(InputNonlinearity::custom(
            [](const Eigen::VectorXd& u, double) { return u; }, b));
      } else {
        // Rewrap the same map under the new declared gamma.
        updated.push_back(InputNonlinearity::custom(
            [nl](const Eigen::VectorXd& u, double t) { return nl.apply(u, t); }, b));
      }
    }
    cfg.nonlinearities = std::move(updated);
    cfg.bounds = cfg.nonlinearities.front().bounds();
  }
  if (ov.graph_file) {
    std::ifstream f(*ov.graph_file);
    if (!f) throw ConfigError("cannot open graph file: " + *ov.graph_file);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("graph file JSON parse error: ") + e.what());
    }
    NetworkGraph g = j.contains("graph") ? parse_graph(j.at("graph")) : parse_graph(j);
    if (g.num_agents() != cfg.graph.num_agents()) {
      throw ConfigError("override graph must keep the same number of agents");
    }
    cfg.graph = std::move(g);
  }
  if (ov.output_dir) cfg.output_dir = *ov.output_dir;
  return cfg;
}

}  // namespace doccoord

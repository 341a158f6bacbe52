#include "doccoord/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>

#include "doccoord/certificates.hpp"
#include "doccoord/errors.hpp"

namespace doccoord::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

ordered_json matrix_json(const Eigen::MatrixXd& M) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_json(const ordered_json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
}

struct VerifyOutcome {
  Certificate certificate;
  VerificationReport report;
  SuboptimalityBound bound;
  ReferencePoint reference;
  LaplacianSpectrum spectrum;
  LmiProblem problem;
};

VerifyOutcome run_verification(const ScenarioConfig& cfg) {
  if (!cfg.gains) throw ConfigError("verification requires 'gains' in the config");
  VerifyOutcome out;
  out.spectrum = build_laplacian(cfg.graph);
  out.problem = build_lmi(cfg.model, cfg.bounds, cfg.objectives, out.spectrum, *cfg.gains);
  FeasibilityOptions fopts;
  fopts.accept_margin = cfg.solver.accept_margin;
  fopts.pd_floor = cfg.solver.pd_floor;
  out.certificate = solve_feasibility(out.problem, fopts);
  out.report = verify_certificate(out.problem, out.certificate);
  out.reference = solve_reference_point(cfg.model, cfg.bounds, out.spectrum, cfg.objectives,
                                        *cfg.gains);
  out.bound = suboptimality_bound(out.certificate, cfg.model, cfg.bounds, out.reference,
                                  cfg.solver.rho);
  return out;
}

ordered_json verify_report_json(const VerifyOutcome& v) {
  ordered_json j;
  j["pass"] = v.report.pass;
  j["lambda_min_P"] = v.report.lambda_min_P;
  j["lambda_min_P_check"] = v.report.lambda_min_P_check;
  j["worst_block_lambda_max"] = v.report.worst_block_lambda_max;
  ordered_json blocks = ordered_json::array();
  for (const auto& b : v.report.block_reports) {
    blocks.push_back({{"label", b.label}, {"lambda", b.lambda}, {"lambda_max", b.lambda_max}});
  }
  j["blocks"] = std::move(blocks);
  j["rho_certified"] = v.certificate.rho;
  j["rho_used"] = v.bound.rho;
  // ISS splitting parameter; the bound uses its limit value, so normally unset.
  j["theta"] = v.certificate.theta ? ordered_json(*v.certificate.theta) : ordered_json(nullptr);
  j["epsilon"] = v.bound.epsilon;
  j["epsilon_tight"] = v.bound.epsilon_tight;
  j["norm_B"] = v.bound.norm_B;
  j["norm_u_bar"] = v.bound.norm_u_bar;
  j["x_star"] = std::vector<double>(v.reference.x_star.data(),
                                    v.reference.x_star.data() + v.reference.x_star.size());
  return j;
}

ordered_json metrics_json(const ScenarioConfig& cfg, const Trajectory& traj,
                          const TailMetrics& tail, double vsum,
                          const SuboptimalityBound& bound) {
  ordered_json j;
  j["t_final"] = cfg.sim.t_final;
  j["dt"] = cfg.sim.dt;
  j["seed"] = cfg.sim.rng_seed;
  j["tail_window"] = {cfg.sim.tail_start, cfg.sim.tail_end};
  j["tail_sup_err"] = tail.sup_err;
  j["tail_mean_err"] = tail.mean_err;
  j["tail_sup_obj_gap"] = tail.sup_obj_gap;
  j["max_v_sum"] = vsum;
  j["epsilon"] = bound.epsilon;
  j["epsilon_tight"] = bound.epsilon_tight;
  j["bound_satisfied"] = tail.sup_err < bound.epsilon;
  j["final_err"] = traj.err(traj.samples() - 1);
  return j;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Diverged& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitFail;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitFail;
  } catch (const SynthesisInfeasible& e) {
    std::cerr << "synthesis failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

std::string resolve_output_dir(const ScenarioConfig& cfg, const Overrides& ov) {
  if (ov.output_dir) return *ov.output_dir;
  if (const char* env = std::getenv("DOC_COORD_OUT"); env && *env) return env;
  return cfg.output_dir;
}

int cmd_verify(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    ScenarioConfig cfg = apply_overrides(ScenarioConfig::from_file(config_path), ov);
    const std::string out_dir = resolve_output_dir(cfg, ov);
    const VerifyOutcome v = run_verification(cfg);
    write_json(verify_report_json(v), fs::path(out_dir) / "verify_report.json");
    std::cout << (v.report.pass ? "PASS" : "FAIL")
              << " worst block lambda_max = " << v.report.worst_block_lambda_max
              << ", rho = " << v.certificate.rho << ", epsilon = " << v.bound.epsilon << "\n";
    return v.report.pass ? kExitPass : kExitFail;
  });
}

int cmd_synthesize(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    ScenarioConfig cfg = apply_overrides(ScenarioConfig::from_file(config_path), ov);
    const std::string out_dir = resolve_output_dir(cfg, ov);
    const LaplacianSpectrum spectrum = build_laplacian(cfg.graph);
    SynthesisOptions sopts;
    sopts.margin_target = cfg.solver.synthesis_margin;
    sopts.q_floor = cfg.solver.synthesis_q_floor;
    sopts.feasibility.accept_margin = cfg.solver.accept_margin;
    sopts.feasibility.pd_floor = cfg.solver.pd_floor;
    const SynthesisResult res =
        synthesize_gain(cfg.model, cfg.bounds, cfg.objectives, spectrum, sopts);
    const LmiProblem prob =
        build_lmi(cfg.model, cfg.bounds, cfg.objectives, spectrum, res.gains);
    const VerificationReport rep = verify_certificate(prob, res.certificate);

    ordered_json j;
    j["K1"] = matrix_json(res.gains.K1);
    j["K2"] = matrix_json(res.gains.K2);
    j["K3"] = matrix_json(res.gains.K3);
    j["K4"] = matrix_json(res.gains.K4);
    j["certificate"] = {{"rho", res.certificate.rho},
                        {"lambda_min_P", rep.lambda_min_P},
                        {"lambda_min_P_check", rep.lambda_min_P_check},
                        {"worst_block_lambda_max", rep.worst_block_lambda_max},
                        {"P", matrix_json(res.certificate.P)},
                        {"P_check", matrix_json(res.certificate.P_check)}};
    write_json(j, fs::path(out_dir) / "gains.json");
    std::cout << "synthesized gain ok, rho = " << res.certificate.rho << "\n";
    return kExitPass;
  });
}

int cmd_simulate(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    ScenarioConfig cfg = apply_overrides(ScenarioConfig::from_file(config_path), ov);
    const std::string out_dir = resolve_output_dir(cfg, ov);
    if (!cfg.gains) throw ConfigError("simulation requires 'gains' in the config");
    const VerifyOutcome v = run_verification(cfg);
    const Trajectory traj = simulate(cfg.model, cfg.bounds, cfg.nonlinearities, cfg.graph,
                                     cfg.objectives, *cfg.gains, cfg.sim);
    const TailMetrics tail = tail_metrics(traj, cfg.sim.tail_start, cfg.sim.tail_end);
    const double vsum = max_v_sum(traj, cfg.graph.num_agents());
    fs::create_directories(out_dir);
    write_trajectory_csv(traj, cfg.graph.num_agents(), cfg.model.n(), cfg.model.m(),
                         (fs::path(out_dir) / "trajectory.csv").string());
    write_json(metrics_json(cfg, traj, tail, vsum, v.bound),
               fs::path(out_dir) / "metrics.json");
    std::cout << "tail sup err = " << tail.sup_err << " (bound " << v.bound.epsilon << ")\n";
    return kExitPass;
  });
}

int cmd_reproduce(const Overrides& ov) {
  return guarded([&] {
    ScenarioConfig cfg = apply_overrides(ScenarioConfig::from_string(builtin_scenario_json()), ov);
    const fs::path out_dir = fs::path(resolve_output_dir(cfg, ov)) / "reproduce";
    fs::create_directories(out_dir);

    const VerifyOutcome v = run_verification(cfg);
    write_json(verify_report_json(v), out_dir / "verify_report.json");
    if (!v.report.pass) {
      std::cerr << "certificate verification failed\n";
      return kExitFail;
    }

    const Trajectory traj = simulate(cfg.model, cfg.bounds, cfg.nonlinearities, cfg.graph,
                                     cfg.objectives, *cfg.gains, cfg.sim);
    const TailMetrics tail = tail_metrics(traj, cfg.sim.tail_start, cfg.sim.tail_end);
    const double vsum = max_v_sum(traj, cfg.graph.num_agents());
    write_trajectory_csv(traj, cfg.graph.num_agents(), cfg.model.n(), cfg.model.m(),
                         (out_dir / "trajectory.csv").string());
    write_json(metrics_json(cfg, traj, tail, vsum, v.bound), out_dir / "metrics.json");

    const bool ok = tail.sup_err <= 0.3 && tail.sup_err < v.bound.epsilon && vsum <= 1e-6;
    std::cout << (ok ? "PASS" : "FAIL") << " tail sup err = " << tail.sup_err
              << ", epsilon = " << v.bound.epsilon << ", max |sum v| = " << vsum << "\n";
    return ok ? kExitPass : kExitFail;
  });
}

}  // namespace doccoord::cli

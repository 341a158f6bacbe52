#include <CLI11.hpp>
#include <string>

#include "doccoord/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed sub-optimal coordination toolkit: certificate "
               "verification, gain synthesis and closed-loop simulation"};
  app.require_subcommand(1);

  std::string config_path;
  doccoord::Overrides ov;
  double dt = 0.0, t_final = 0.0, gamma = 0.0;
  std::uint64_t seed = 0;
  std::string graph_file, out_dir;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("config", config_path, "scenario JSON file")->required();
    }
    sub->add_option("--dt", dt, "integrator step size override");
    sub->add_option("--t-final", t_final, "horizon override");
    sub->add_option("--seed", seed, "RNG seed override");
    sub->add_option("--gamma", gamma, "declared residual sector bound override");
    sub->add_option("--graph", graph_file, "JSON file with a replacement graph");
    sub->add_option("--out", out_dir, "output directory override");
  };

  CLI::App* verify = app.add_subcommand("verify", "solve and check the stability certificates");
  CLI::App* synthesize = app.add_subcommand("synthesize", "design gains by the LMI change of variables");
  CLI::App* simulate = app.add_subcommand("simulate", "integrate the closed loop and report tail metrics");
  CLI::App* reproduce = app.add_subcommand("reproduce-paper",
                                           "run the bundled five-agent benchmark end to end");
  add_common(verify, true);
  add_common(synthesize, true);
  add_common(simulate, true);
  add_common(reproduce, false);

  CLI11_PARSE(app, argc, argv);

  auto fill = [&](CLI::App* sub) {
    if (sub->count("--dt")) ov.dt = dt;
    if (sub->count("--t-final")) ov.t_final = t_final;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--gamma")) ov.gamma = gamma;
    if (sub->count("--graph")) ov.graph_file = graph_file;
    if (sub->count("--out")) ov.output_dir = out_dir;
  };

  if (verify->parsed()) {
    fill(verify);
    return doccoord::cli::cmd_verify(config_path, ov);
  }
  if (synthesize->parsed()) {
    fill(synthesize);
    return doccoord::cli::cmd_synthesize(config_path, ov);
  }
  if (simulate->parsed()) {
    fill(simulate);
    return doccoord::cli::cmd_simulate(config_path, ov);
  }
  fill(reproduce);
  return doccoord::cli::cmd_reproduce(ov);
}

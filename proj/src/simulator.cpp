#include "doccoord/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doccoord/errors.hpp"

namespace doccoord {

namespace {

// One RK4 step of s' = f(t, s).
template <typename Fn>
Eigen::VectorXd rk4_step(const Fn& f, double t, double dt, const Eigen::VectorXd& s) {
  const Eigen::VectorXd k1 = f(t, s);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, s + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, s + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, s + dt * k3);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory simulate(const AgentModel& model, const SectorBounds& bounds,
                    const std::vector<InputNonlinearity>& nls, const NetworkGraph& graph,
                    const ObjectiveSet& objs, const GainSet& gains, const SimConfig& cfg) {
  const int n = model.n();
  const int m = model.m();
  const int N = graph.num_agents();
  validate_bounds(bounds);
  gains.validate(n, m);
  if (objs.num_agents() != N) throw DimensionMismatch("one objective per agent required");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (cfg.record_stride < 1) throw ConfigError("record_stride must be positive");
  if (!(cfg.tail_start < cfg.tail_end) || cfg.tail_end > cfg.t_final + 1e-12) {
    throw ConfigError("tail window must satisfy t_a < t_b <= t_final");
  }

  Eigen::VectorXd x0;
  if (cfg.initial_x) {
    if (cfg.initial_x->size() != n * N) throw DimensionMismatch("initial_x must be nN");
    x0 = *cfg.initial_x;
  } else {
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    x0.resize(n * N);
    for (int k = 0; k < n * N; ++k) x0(k) = unif(rng);
  }
  auto ctrl0 = [&](const std::optional<Eigen::VectorXd>& given) {
    if (!given) return Eigen::VectorXd::Zero(n * N).eval();
    if (given->size() != n * N) throw DimensionMismatch("controller state must be nN");
    return *given;
  };
  const Eigen::VectorXd v0 = ctrl0(cfg.initial_v);
  // Assumption on the conserved quantity: the v components must sum to zero.
  Eigen::VectorXd vsum = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < N; ++i) vsum += v0.segment(i * n, n);
  if (vsum.norm() > 1e-12) throw ConfigError("sum_i v_i(0) must be zero");

  Eigen::VectorXd s(4 * n * N);
  s << x0, v0, ctrl0(cfg.initial_zeta), ctrl0(cfg.initial_eta);

  const Eigen::VectorXd x_star = solve_global_optimizer(objs);
  const Eigen::VectorXd x_bar = x_star.replicate(N, 1);
  const double f_star = objs.total_value(x_star);

  auto rhs = [&](double t, const Eigen::VectorXd& state) {
    ClosedLoopState cls{state.segment(0, n * N), state.segment(n * N, n * N),
                        state.segment(2 * n * N, n * N), state.segment(3 * n * N, n * N)};
    const Eigen::VectorXd u = control_input(gains, cls);
    Eigen::VectorXd d(4 * n * N);
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd phi = agent_nonlinearity(nls, i).apply(u.segment(i * m, m), t);
      d.segment(i * n, n) = model.A() * cls.x.segment(i * n, n) + model.B0() * phi;
    }
    const ControllerDerivatives cd = controller_derivatives(graph, objs, cls);
    d.segment(n * N, n * N) = cd.v_dot;
    d.segment(2 * n * N, n * N) = cd.zeta_dot;
    d.segment(3 * n * N, n * N) = cd.eta_dot;
    return d;
  };

  const long steps = std::lround(cfg.t_final / cfg.dt);
  const int samples = static_cast<int>(steps / cfg.record_stride) + 1;
  Trajectory traj;
  traj.x_star = x_star;
  traj.times.reserve(static_cast<std::size_t>(samples));
  traj.x.resize(samples, n * N);
  traj.v.resize(samples, n * N);
  traj.zeta.resize(samples, n * N);
  traj.eta.resize(samples, n * N);
  traj.u.resize(samples, m * N);
  traj.err.resize(samples);
  traj.obj_gap.resize(samples);

  int row = 0;
  auto record = [&](double t, const Eigen::VectorXd& state) {
    ClosedLoopState cls{state.segment(0, n * N), state.segment(n * N, n * N),
                        state.segment(2 * n * N, n * N), state.segment(3 * n * N, n * N)};
    traj.times.push_back(t);
    traj.x.row(row) = cls.x.transpose();
    traj.v.row(row) = cls.v.transpose();
    traj.zeta.row(row) = cls.zeta.transpose();
    traj.eta.row(row) = cls.eta.transpose();
    traj.u.row(row) = control_input(gains, cls).transpose();
    traj.err(row) = (cls.x - x_bar).norm();
    traj.obj_gap(row) = std::abs(objs.stacked_value(cls.x) - f_star);
    ++row;
  };

  record(0.0, s);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    s = rk4_step(rhs, t, cfg.dt, s);
    if (!s.allFinite()) {
      throw NonFinite("state became NaN/Inf at t = " + std::to_string(t + cfg.dt));
    }
    if (s.cwiseAbs().maxCoeff() > cfg.divergence_guard) {
      throw Diverged(t + cfg.dt,
                     "state norm exceeded " + std::to_string(cfg.divergence_guard) + " at t = " +
                         std::to_string(t + cfg.dt));
    }
    if ((k + 1) % cfg.record_stride == 0) {
      record(static_cast<double>(k + 1) * cfg.dt, s);
    }
  }
  return traj;
}

TailMetrics tail_metrics(const Trajectory& traj, double t_a, double t_b) {
  TailMetrics out;
  double sum = 0.0;
  for (int k = 0; k < traj.samples(); ++k) {
    const double t = traj.times[static_cast<std::size_t>(k)];
    if (t < t_a - 1e-12 || t > t_b + 1e-12) continue;
    out.sup_err = std::max(out.sup_err, traj.err(k));
    out.sup_obj_gap = std::max(out.sup_obj_gap, traj.obj_gap(k));
    sum += traj.err(k);
    ++out.samples;
  }
  if (out.samples == 0) throw EmptyWindow("no recorded samples in the tail window");
  out.mean_err = sum / out.samples;
  return out;
}

double max_v_sum(const Trajectory& traj, int num_agents) {
  const int n = static_cast<int>(traj.v.cols()) / num_agents;
  double worst = 0.0;
  for (int k = 0; k < traj.samples(); ++k) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < num_agents; ++i) {
      sum += traj.v.row(k).segment(i * n, n).transpose();
    }
    worst = std::max(worst, sum.norm());
  }
  return worst;
}

double cross_check_transformed(const Trajectory& traj, const ReferencePoint& reference,
                               const AgentModel& model, const SectorBounds& bounds,
                               const std::vector<InputNonlinearity>& nls,
                               const LaplacianSpectrum& graph, const ObjectiveSet& objs,
                               const GainSet& gains, double dt) {
  // Rebuild the block-coefficient data and integrate the transformed system
  // from the mapped initial state with the same step size.
  const TransformedBlocks blocks = assemble_transformed_blocks(model, bounds, graph, objs);
  auto rhs = [&](double t, const Eigen::VectorXd& xi) {
    return shifted_transformed_derivative(blocks, gains, reference, graph, objs, nls, t, xi);
  };

  Eigen::VectorXd xi = to_transformed_blocks(traj.state_at(0), reference, graph);
  double worst = 0.0;
  double t = traj.times[0];
  for (int k = 1; k < traj.samples(); ++k) {
    const double t_target = traj.times[static_cast<std::size_t>(k)];
    const long steps = std::lround((t_target - t) / dt);
    for (long s = 0; s < steps; ++s) {
      xi = rk4_step(rhs, t + static_cast<double>(s) * dt, dt, xi);
    }
    t = t_target;
    const Eigen::VectorXd mapped = to_transformed_blocks(traj.state_at(k), reference, graph);
    worst = std::max(worst, (mapped - xi).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::string trajectory_csv(const Trajectory& traj, int num_agents, int n, int m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(traj.samples()) * 64);
  out += "t";
  auto head = [&](const char* name, int d) {
    for (int i = 1; i <= num_agents; ++i)
      for (int j = 1; j <= d; ++j)
        out += "," + std::string(name) + "_" + std::to_string(i) + "_" + std::to_string(j);
  };
  head("x", n);
  head("v", n);
  head("zeta", n);
  head("eta", n);
  head("u", m);
  out += ",err,obj_gap\n";

  char buf[40];
  auto put = [&](double val) {
    std::snprintf(buf, sizeof(buf), ",%.17g", val);
    out += buf;
  };
  for (int k = 0; k < traj.samples(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[static_cast<std::size_t>(k)]);
    out += buf;
    for (int c = 0; c < traj.x.cols(); ++c) put(traj.x(k, c));
    for (int c = 0; c < traj.v.cols(); ++c) put(traj.v(k, c));
    for (int c = 0; c < traj.zeta.cols(); ++c) put(traj.zeta(k, c));
    for (int c = 0; c < traj.eta.cols(); ++c) put(traj.eta(k, c));
    for (int c = 0; c < traj.u.cols(); ++c) put(traj.u(k, c));
    put(traj.err(k));
    put(traj.obj_gap(k));
    out += "\n";
  }
  return out;
}

void write_trajectory_csv(const Trajectory& traj, int num_agents, int n, int m,
                          const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << trajectory_csv(traj, num_agents, n, m);
}

}  // namespace doccoord

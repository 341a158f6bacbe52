#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "doccoord/graph.hpp"
#include "doccoord/nonlinearity.hpp"
#include "doccoord/objectives.hpp"
#include "doccoord/protocol.hpp"

namespace doccoord {

struct SimConfig {
  double t_final = 50.0;
  double dt = 1e-3;
  int record_stride = 10;
  std::optional<Eigen::VectorXd> initial_x;  // nN; random in [-2, 2] when absent
  std::optional<Eigen::VectorXd> initial_v, initial_zeta, initial_eta;  // default zeros
  double tail_start = 40.0;
  double tail_end = 50.0;
  std::uint64_t rng_seed = 1;
  double divergence_guard = 1e9;
};

/// Time-indexed record of the full closed loop. Row k of each matrix is the
/// k-th recorded sample.
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd x, v, zeta, eta;  // samples x nN
  Eigen::MatrixXd u;                // samples x mN
  Eigen::VectorXd err;              // ||x - 1 (x) x*||
  Eigen::VectorXd obj_gap;          // |f(x) - f(x*)| agent-wise
  Eigen::VectorXd x_star;

  int samples() const { return static_cast<int>(times.size()); }
  ClosedLoopState state_at(int k) const {
    return {x.row(k).transpose(), v.row(k).transpose(), zeta.row(k).transpose(),
            eta.row(k).transpose()};
  }
};

/// Classical fixed-step RK4 integration of the closed loop; u and phi are
/// evaluated at every stage time. Throws Diverged past the guard and
/// NonFinite on NaN.
Trajectory simulate(const AgentModel& model, const SectorBounds& bounds,
                    const std::vector<InputNonlinearity>& nls, const NetworkGraph& graph,
                    const ObjectiveSet& objs, const GainSet& gains, const SimConfig& cfg);

struct TailMetrics {
  double sup_err = 0.0;
  double mean_err = 0.0;
  double sup_obj_gap = 0.0;
  int samples = 0;
};

/// Empirical limsup estimate over recorded samples with t in [t_a, t_b].
TailMetrics tail_metrics(const Trajectory& traj, double t_a, double t_b);

/// Max over recorded times of ||sum_i v_i(t)||; exactly conserved by the
/// dynamics, degraded only by rounding.
double max_v_sum(const Trajectory& traj, int num_agents);

/// Re-simulates the shifted block system from the mapped initial state at the
/// same step size and returns the sup-norm deviation from the mapped
/// original-coordinates trajectory.
double cross_check_transformed(const Trajectory& traj, const ReferencePoint& reference,
                               const AgentModel& model, const SectorBounds& bounds,
                               const std::vector<InputNonlinearity>& nls,
                               const LaplacianSpectrum& graph, const ObjectiveSet& objs,
                               const GainSet& gains, double dt);

/// CSV persistence: header t,x_1_1..x_N_n,v_...,zeta_...,eta_...,u_...,err,obj_gap;
/// floats with 17 significant digits.
std::string trajectory_csv(const Trajectory& traj, int num_agents, int n, int m);
void write_trajectory_csv(const Trajectory& traj, int num_agents, int n, int m,
                          const std::string& path);

}  // namespace doccoord

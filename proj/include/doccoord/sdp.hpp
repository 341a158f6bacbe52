#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace doccoord::sdp {

/// Affine matrix-valued slack S(y) = constant + sum_k y_k coeffs[k], required
/// to stay positive definite. coeffs must all be symmetric and match
/// constant's size; entries for variables the cone does not touch may be
/// empty (treated as zero).
struct MatrixCone {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coeffs;
};

/// minimize cost . y  subject to every cone staying positive definite.
struct Problem {
  int num_vars = 0;
  Eigen::VectorXd cost;
  std::vector<MatrixCone> cones;
};

struct Options {
  double tau0 = 1.0;
  double tau_growth = 8.0;
  double gap_tol = 1e-9;          // stop when total cone dim / tau <= gap_tol
  int max_newton_per_stage = 80;
  double newton_tol = 1e-11;      // on squared Newton decrement / 2
  double min_step = 1e-13;
};

struct Result {
  Eigen::VectorXd y;
  bool converged = false;  // final stage ended on the Newton decrement criterion
  int newton_iterations = 0;
};

/// True iff every cone is strictly positive definite at y.
bool is_strictly_feasible(const Problem& prob, const Eigen::VectorXd& y);

/// Log-barrier path following with damped Newton steps. y0 must be strictly
/// feasible. Problem sizes here are tiny (tens of variables, cones below
/// 20x20), so everything is dense.
Result minimize(const Problem& prob, const Eigen::VectorXd& y0, const Options& opts = {});

}  // namespace doccoord::sdp

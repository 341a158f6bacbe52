#pragma once

#include <Eigen/Dense>
#include <vector>

#include "doccoord/graph.hpp"
#include "doccoord/nonlinearity.hpp"
#include "doccoord/objectives.hpp"

namespace doccoord {

/// Homogeneous agent dynamics xdot = A x + B0 phi(u, t). Construction checks
/// stabilizability (PBH) and that B0 has full row rank.
class AgentModel {
 public:
  AgentModel(Eigen::MatrixXd A, Eigen::MatrixXd B0);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B0() const { return B0_; }
  /// B = beta * B0, the linear part of the sector decomposition.
  Eigen::MatrixXd B(const SectorBounds& bounds) const { return bounds.beta * B0_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B0_.cols()); }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B0_;
};

/// True iff (A, B) is stabilizable (PBH on eigenvalues with Re >= -tol).
bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol = 1e-8);

/// The four protocol gains; u_i = K1 x_i + K2 v_i + K3 zeta_i + K4 eta_i.
struct GainSet {
  Eigen::MatrixXd K1, K2, K3, K4;

  /// [K1 K2 K3 K4], the i-block gain.
  Eigen::MatrixXd stacked() const;
  /// [K1 K3 K4], the block-1 gain (v_1 is identically zero).
  Eigen::MatrixXd stacked_check() const;
  void validate(int n, int m) const;
};

/// Stacked closed-loop state, each field an nN vector.
struct ClosedLoopState {
  Eigen::VectorXd x, v, zeta, eta;
};

/// Constant solution of the steady-state system: x_bar = 1 (x) x*, together
/// with the matching controller states and input.
struct ReferencePoint {
  Eigen::VectorXd x_star;                      // n
  Eigen::VectorXd x_bar, v_bar, zeta_bar, eta_bar;  // nN
  Eigen::VectorXd u_bar;                       // mN
};

/// u = (I (x) K1) x + ... from agent-local quantities only.
Eigen::VectorXd control_input(const GainSet& gains, const ClosedLoopState& state);

struct ControllerDerivatives {
  Eigen::VectorXd v_dot, zeta_dot, eta_dot;  // nN each
};

/// vdot_i = sum_j a_ij (x_j - x_i); zetadot_i = vdot_i + v_i - grad f_i(x_i);
/// etadot_i = x_i - zeta_i. Agent i reads only its own state and its
/// neighbors' x.
ControllerDerivatives controller_derivatives(const NetworkGraph& graph,
                                             const ObjectiveSet& objs,
                                             const ClosedLoopState& state);

/// Solves the steady-state equations for (x_bar, v_bar, zeta_bar, eta_bar,
/// u_bar): u_bar_i is the minimum-norm solution of B u = -A x*, eta_bar_i the
/// least-squares solution of K4 eta = u_bar_i - K1 x* - K2 v_bar_i - K3 x*.
/// All five residuals are checked to 1e-8.
ReferencePoint solve_reference_point(const AgentModel& model, const SectorBounds& bounds,
                                     const LaplacianSpectrum& graph, const ObjectiveSet& objs,
                                     const GainSet& gains);

/// Coefficients of the Laplacian-diagonalized block systems. The i-block
/// state matrix is affine in the graph eigenvalue: A_i(lambda) = A_const +
/// lambda * A_slope.
struct TransformedBlocks {
  // block 1 (3n states: x, zeta, eta)
  Eigen::MatrixXd A1, B1, L1;
  // i-blocks (4n states: x, v, zeta, eta), i = 2..N
  Eigen::MatrixXd Ai_const, Ai_slope, Bprime, Lprime;
  Eigen::VectorXd lambdas;  // all graph eigenvalues, ascending
  int n = 0, m = 0;
  double ell = 0.0;

  Eigen::MatrixXd Ai(double lambda) const { return Ai_const + lambda * Ai_slope; }
};

TransformedBlocks assemble_transformed_blocks(const AgentModel& model,
                                              const SectorBounds& bounds,
                                              const LaplacianSpectrum& graph,
                                              const ObjectiveSet& objs);

/// Exact derivative of the shifted, (U^T (x) I)-transformed closed loop at
/// state xi (stacked [xi_1 in R^{3n}; xi_2..xi_N in R^{4n}]). Used as the
/// cross-check oracle against the original-coordinates simulation. The
/// fictitious input w*(t) = phi'(u_bar, t) enters through -B columns.
Eigen::VectorXd shifted_transformed_derivative(
    const TransformedBlocks& blocks, const GainSet& gains, const ReferencePoint& reference,
    const LaplacianSpectrum& graph, const ObjectiveSet& objs,
    const std::vector<InputNonlinearity>& nls, double t, const Eigen::VectorXd& xi);

/// Maps a shifted original-coordinates state to the stacked block vector
/// (v-block-1 component, identically zero along trajectories, is dropped).
Eigen::VectorXd to_transformed_blocks(const ClosedLoopState& state,
                                      const ReferencePoint& reference,
                                      const LaplacianSpectrum& graph);

/// Per-agent nonlinearity lookup: a list of size 1 is shared by all agents.
const InputNonlinearity& agent_nonlinearity(const std::vector<InputNonlinearity>& nls, int i);

}  // namespace doccoord

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "doccoord/graph.hpp"
#include "doccoord/nonlinearity.hpp"
#include "doccoord/objectives.hpp"
#include "doccoord/protocol.hpp"

namespace doccoord {

/// Assembler for the stability matrix inequalities: the i-block family
/// (one per graph eigenvalue lambda_i, i >= 2, shared P of size 4n) and the
/// block-1 inequality (P_check of size 3n). Both are affine in lambda and in
/// the candidate matrix.
struct LmiProblem {
  TransformedBlocks blocks;
  Eigen::MatrixXd K;             // [K1 K2 K3 K4]
  Eigen::MatrixXd K_check;       // [K1 K3 K4]
  Eigen::MatrixXd sector_gain;   // [gamma K; mu' J]
  Eigen::MatrixXd sector_gain1;  // [gamma K_check; mu' J_check]
  double gamma = 0.0;
  double mu_prime = 0.0;
  double lambda2 = 0.0;
  double lambdaN = 0.0;

  int n() const { return blocks.n; }
  int m() const { return blocks.m; }
  /// Full symmetric (4n+m+n) i-block matrix at eigenvalue lambda for P.
  Eigen::MatrixXd assemble_iblock(double lambda, const Eigen::MatrixXd& P) const;
  /// Full symmetric (3n+m+n) block-1 matrix for P_check.
  Eigen::MatrixXd assemble_block1(const Eigen::MatrixXd& P_check) const;
};

LmiProblem build_lmi(const AgentModel& model, const SectorBounds& bounds,
                     const ObjectiveSet& objs, const LaplacianSpectrum& graph,
                     const GainSet& gains);

/// Witness of the matrix inequalities: P > 0 (4n), P_check > 0 (3n), and the
/// certified state-block margin rho (largest shift of the top-left block that
/// keeps every assembled matrix negative semidefinite).
struct Certificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd P_check;
  double rho = 0.0;
  std::optional<double> theta;  // ISS splitting parameter; bound uses the theta->1 limit
};

struct BlockReport {
  std::string label;
  double lambda = 0.0;
  double lambda_max = 0.0;
};

struct VerificationReport {
  std::vector<BlockReport> block_reports;
  double lambda_min_P = 0.0;
  double lambda_min_P_check = 0.0;
  double worst_block_lambda_max = 0.0;
  bool pass = false;

  static constexpr double kMargin = 1e-9;
};

/// Dense eigendecomposition check of every block at lambda_2, lambda_N and
/// each actual graph eigenvalue; PASS iff all lambda_max <= -1e-9 and
/// lambda_min(P), lambda_min(P_check) >= 1e-9.
VerificationReport verify_certificate(const LmiProblem& prob, const Certificate& cert);

struct FeasibilityOptions {
  double accept_margin = 1e-8;  // accept when min-t stage reaches t <= -accept_margin
  double strict_shift = 1e-9;   // delta in the rho-maximization stage
  double pd_floor = 1e-6;       // P >= pd_floor * I
};

/// Barrier feasibility solve for (P, P_check) given fixed gains: stage one
/// minimizes t with blocks <= t I (accept at t <= -1e-8), stage two maximizes
/// the state-block margin rho. Throws Infeasible when t cannot be driven
/// negative. The returned rho is re-certified by bisection with a plain
/// eigenvalue oracle.
Certificate solve_feasibility(const LmiProblem& prob, const FeasibilityOptions& opts = {});

/// Largest rho such that every assembled block with +rho I added to its
/// top-left state block stays negative semidefinite (bisection, eigenvalue
/// oracle).
double certify_rho(const LmiProblem& prob, const Eigen::MatrixXd& P,
                   const Eigen::MatrixXd& P_check);

struct SynthesisOptions {
  double margin_target = 0.05;  // desired block margin for the gain search
  double q_floor = 0.1;         // Q >= q_floor * I in the change of variables
  bool verbose = false;         // stage diagnostics on stderr
  FeasibilityOptions feasibility;
};

struct SynthesisResult {
  GainSet gains;
  Certificate certificate;
};

/// Change-of-variables gain design: solves the linearized i-block LMIs in
/// (Q, Y) at lambda_2 and lambda_N (phase one max-margin, phase two
/// trace-regularized at a fixed margin), recovers K = Y Q^-1, then solves the
/// P and P_check feasibility problems for that K and verifies both. Throws
/// SynthesisInfeasible when any stage fails.
SynthesisResult synthesize_gain(const AgentModel& model, const SectorBounds& bounds,
                                const ObjectiveSet& objs, const LaplacianSpectrum& graph,
                                const SynthesisOptions& opts = {});

struct SuboptimalityBound {
  double epsilon = 0.0;
  double epsilon_tight = 0.0;  // gamma-scaled variant
  double rho = 0.0;
  double norm_B = 0.0;
  double norm_u_bar = 0.0;
  double lambda_max = 0.0;  // max eigenvalue over (P, P_check)
  double lambda_min = 0.0;
};

/// Ultimate-bound radius from the ISS argument:
///   eps = 2 sqrt(lmax/lmin) * (||B|| lmax / rho) * ||u_bar||.
/// rho_override, when given and not exceeding the certified margin, replaces
/// cert.rho in the formula (smaller rho only loosens the bound).
SuboptimalityBound suboptimality_bound(const Certificate& cert, const AgentModel& model,
                                       const SectorBounds& bounds,
                                       const ReferencePoint& reference,
                                       std::optional<double> rho_override = std::nullopt);

}  // namespace doccoord

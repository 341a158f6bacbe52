#include "doccoord/protocol.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <string>

#include "doccoord/errors.hpp"

namespace doccoord {

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int k = 0; k < n; ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    if (lam.real() < -tol) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil << A.cast<std::complex<double>>() - lam * Eigen::MatrixXcd::Identity(n, n),
        B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    if (svd.singularValues()(n - 1) <= tol * std::max(1.0, svd.singularValues()(0))) {
      return false;
    }
  }
  return true;
}

AgentModel::AgentModel(Eigen::MatrixXd A, Eigen::MatrixXd B0)
    : A_(std::move(A)), B0_(std::move(B0)) {
  if (A_.rows() != A_.cols()) throw DimensionMismatch("A must be square");
  if (B0_.rows() != A_.rows()) throw DimensionMismatch("B0 row count must match A");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B0_);
  const int n = static_cast<int>(A_.rows());
  if (B0_.cols() < n ||
      svd.singularValues()(n - 1) <= 1e-8 * std::max(1.0, svd.singularValues()(0))) {
    throw ConfigError("B0 must have full row rank (n <= m)");
  }
  if (!is_stabilizable(A_, B0_)) {
    throw ConfigError("(A, B0) is not stabilizable");
  }
}

Eigen::MatrixXd GainSet::stacked() const {
  Eigen::MatrixXd K(K1.rows(), K1.cols() + K2.cols() + K3.cols() + K4.cols());
  K << K1, K2, K3, K4;
  return K;
}

Eigen::MatrixXd GainSet::stacked_check() const {
  Eigen::MatrixXd K(K1.rows(), K1.cols() + K3.cols() + K4.cols());
  K << K1, K3, K4;
  return K;
}

void GainSet::validate(int n, int m) const {
  for (const auto* K : {&K1, &K2, &K3, &K4}) {
    if (K->rows() != m || K->cols() != n) {
      throw DimensionMismatch("gain must be m x n = " + std::to_string(m) + " x " +
                              std::to_string(n));
    }
  }
}

Eigen::VectorXd control_input(const GainSet& gains, const ClosedLoopState& state) {
  const int n = static_cast<int>(gains.K1.cols());
  const int m = static_cast<int>(gains.K1.rows());
  if (state.x.size() % n != 0 || state.x.size() != state.v.size() ||
      state.x.size() != state.zeta.size() || state.x.size() != state.eta.size()) {
    throw DimensionMismatch("closed-loop state fields must be equal-length nN vectors");
  }
  const int N = static_cast<int>(state.x.size()) / n;
  Eigen::VectorXd u(m * N);
  for (int i = 0; i < N; ++i) {
    u.segment(i * m, m) = gains.K1 * state.x.segment(i * n, n) +
                          gains.K2 * state.v.segment(i * n, n) +
                          gains.K3 * state.zeta.segment(i * n, n) +
                          gains.K4 * state.eta.segment(i * n, n);
  }
  return u;
}

ControllerDerivatives controller_derivatives(const NetworkGraph& graph,
                                             const ObjectiveSet& objs,
                                             const ClosedLoopState& state) {
  const int N = graph.num_agents();
  const int n = objs.dim();
  if (state.x.size() != n * N) {
    throw DimensionMismatch("state dimension does not match graph/objectives");
  }
  ControllerDerivatives d;
  d.v_dot = Eigen::VectorXd::Zero(n * N);
  for (int i = 1; i <= N; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd xi = state.x.segment((i - 1) * n, n);
    for (const auto& [j, w] : graph.neighbors(i)) {
      acc += w * (state.x.segment((j - 1) * n, n) - xi);
    }
    d.v_dot.segment((i - 1) * n, n) = acc;
  }
  d.zeta_dot = d.v_dot + state.v - objs.stacked_gradient(state.x);
  d.eta_dot = state.x - state.zeta;
  return d;
}

ReferencePoint solve_reference_point(const AgentModel& model, const SectorBounds& bounds,
                                     const LaplacianSpectrum& graph, const ObjectiveSet& objs,
                                     const GainSet& gains) {
  const int n = model.n();
  const int m = model.m();
  const int N = static_cast<int>(graph.eigenvalues.size());
  gains.validate(n, m);

  ReferencePoint ref;
  ref.x_star = solve_global_optimizer(objs);
  ref.x_bar = ref.x_star.replicate(N, 1);

  const Eigen::MatrixXd B = model.B(bounds);
  // Minimum-norm u with B u = -A x*.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
  const Eigen::VectorXd rhs = -model.A() * ref.x_star;
  const Eigen::VectorXd u_agent = cod.solve(rhs);
  if ((B * u_agent - rhs).norm() > 1e-8) {
    throw SingularReference("steady-state input equation B u = -A x* is inconsistent");
  }
  ref.u_bar = u_agent.replicate(N, 1);

  ref.v_bar = objs.stacked_gradient(ref.x_bar);
  ref.zeta_bar = ref.x_bar;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codK4(gains.K4);
  ref.eta_bar = Eigen::VectorXd(n * N);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd r = u_agent - gains.K1 * ref.x_star -
                              gains.K2 * ref.v_bar.segment(i * n, n) - gains.K3 * ref.x_star;
    const Eigen::VectorXd eta_i = codK4.solve(r);
    if ((gains.K4 * eta_i - r).norm() > 1e-8) {
      throw SingularReference("K4 eta = residual is unsolvable for agent " + std::to_string(i + 1));
    }
    ref.eta_bar.segment(i * n, n) = eta_i;
  }

  // Residuals of the five steady-state equations.
  const Eigen::MatrixXd& L = graph.laplacian;
  auto kron_L = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n * N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (L(i, j) != 0.0) out.segment(i * n, n) += L(i, j) * y.segment(j * n, n);
    return out;
  };
  Eigen::VectorXd r1_store(n * N);
  for (int i = 0; i < N; ++i) {
    r1_store.segment(i * n, n) = model.A() * ref.x_star + B * u_agent;
  }
  const Eigen::VectorXd r1 = r1_store;
  const Eigen::VectorXd r2 = kron_L(ref.x_bar);
  const Eigen::VectorXd r3 = -kron_L(ref.x_bar) + ref.v_bar - objs.stacked_gradient(ref.x_bar);
  const Eigen::VectorXd r4 = ref.x_bar - ref.zeta_bar;
  ClosedLoopState bar{ref.x_bar, ref.v_bar, ref.zeta_bar, ref.eta_bar};
  const Eigen::VectorXd r5 = control_input(gains, bar) - ref.u_bar;
  for (const auto* r : {&r1, &r2, &r3, &r4, &r5}) {
    if (r->norm() > 1e-8) {
      throw SingularReference("steady-state residual above 1e-8: " + std::to_string(r->norm()));
    }
  }
  return ref;
}

TransformedBlocks assemble_transformed_blocks(const AgentModel& model,
                                              const SectorBounds& bounds,
                                              const LaplacianSpectrum& graph,
                                              const ObjectiveSet& objs) {
  if (graph.eigenvalues.size() >= 2 && graph.lambda2() <= 0.0) {
    throw DisconnectedGraph("lambda_2 must be positive");
  }
  const int n = model.n();
  const int m = model.m();
  const double ell = objs.ell();
  const Eigen::MatrixXd B = model.B(bounds);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  TransformedBlocks blk;
  blk.n = n;
  blk.m = m;
  blk.ell = ell;
  blk.lambdas = graph.eigenvalues;

  blk.A1 = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  blk.A1.topLeftCorner(n, n) = model.A();
  blk.A1.block(n, 0, n, n) = -ell * I;
  blk.A1.block(2 * n, 0, n, n) = I;
  blk.A1.block(2 * n, n, n, n) = -I;

  blk.B1 = Eigen::MatrixXd::Zero(3 * n, m);
  blk.B1.topRows(n) = B;
  blk.L1 = Eigen::MatrixXd::Zero(3 * n, n);
  blk.L1.block(n, 0, n, n) = -ell * I;

  blk.Ai_const = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  blk.Ai_const.topLeftCorner(n, n) = model.A();
  blk.Ai_const.block(2 * n, 0, n, n) = -ell * I;
  blk.Ai_const.block(2 * n, n, n, n) = I;
  blk.Ai_const.block(3 * n, 0, n, n) = I;
  blk.Ai_const.block(3 * n, 2 * n, n, n) = -I;

  blk.Ai_slope = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  blk.Ai_slope.block(n, 0, n, n) = -I;
  blk.Ai_slope.block(2 * n, 0, n, n) = -I;

  blk.Bprime = Eigen::MatrixXd::Zero(4 * n, m);
  blk.Bprime.topRows(n) = B;
  blk.Lprime = Eigen::MatrixXd::Zero(4 * n, n);
  blk.Lprime.block(2 * n, 0, n, n) = -ell * I;
  return blk;
}

const InputNonlinearity& agent_nonlinearity(const std::vector<InputNonlinearity>& nls, int i) {
  if (nls.empty()) throw ConfigError("no input nonlinearity configured");
  return nls.size() == 1 ? nls[0] : nls.at(static_cast<std::size_t>(i));
}

namespace {

// Applies (U^T (x) I_d) or (U (x) I_d) to a stacked vector.
Eigen::VectorXd kron_apply(const Eigen::MatrixXd& U, const Eigen::VectorXd& y, int d,
                           bool transpose) {
  const int N = static_cast<int>(U.rows());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double c = transpose ? U(j, i) : U(i, j);
      if (c != 0.0) out.segment(i * d, d) += c * y.segment(j * d, d);
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd to_transformed_blocks(const ClosedLoopState& state,
                                      const ReferencePoint& reference,
                                      const LaplacianSpectrum& graph) {
  const int N = static_cast<int>(graph.eigenvalues.size());
  const int n = static_cast<int>(state.x.size()) / N;
  const Eigen::MatrixXd& U = graph.basis;
  const Eigen::VectorXd xb = kron_apply(U, state.x - reference.x_bar, n, true);
  const Eigen::VectorXd vb = kron_apply(U, state.v - reference.v_bar, n, true);
  const Eigen::VectorXd zb = kron_apply(U, state.zeta - reference.zeta_bar, n, true);
  const Eigen::VectorXd eb = kron_apply(U, state.eta - reference.eta_bar, n, true);

  Eigen::VectorXd xi(3 * n + 4 * n * (N - 1));
  xi.segment(0, n) = xb.segment(0, n);
  xi.segment(n, n) = zb.segment(0, n);
  xi.segment(2 * n, n) = eb.segment(0, n);
  int off = 3 * n;
  for (int i = 1; i < N; ++i) {
    xi.segment(off, n) = xb.segment(i * n, n);
    xi.segment(off + n, n) = vb.segment(i * n, n);
    xi.segment(off + 2 * n, n) = zb.segment(i * n, n);
    xi.segment(off + 3 * n, n) = eb.segment(i * n, n);
    off += 4 * n;
  }
  return xi;
}

Eigen::VectorXd shifted_transformed_derivative(
    const TransformedBlocks& blocks, const GainSet& gains, const ReferencePoint& reference,
    const LaplacianSpectrum& graph, const ObjectiveSet& objs,
    const std::vector<InputNonlinearity>& nls, double t, const Eigen::VectorXd& xi) {
  const int n = blocks.n;
  const int m = blocks.m;
  const int N = static_cast<int>(graph.eigenvalues.size());
  if (xi.size() != 3 * n + 4 * n * (N - 1)) {
    throw DimensionMismatch("xi must be stacked as [3n; (N-1) x 4n]");
  }
  const Eigen::MatrixXd& U = graph.basis;

  // Unpack blocks into transformed stacked vectors (v-block 1 is zero).
  Eigen::VectorXd xb = Eigen::VectorXd::Zero(n * N), vb = Eigen::VectorXd::Zero(n * N),
                  zb = Eigen::VectorXd::Zero(n * N), eb = Eigen::VectorXd::Zero(n * N);
  xb.segment(0, n) = xi.segment(0, n);
  zb.segment(0, n) = xi.segment(n, n);
  eb.segment(0, n) = xi.segment(2 * n, n);
  int off = 3 * n;
  for (int i = 1; i < N; ++i) {
    xb.segment(i * n, n) = xi.segment(off, n);
    vb.segment(i * n, n) = xi.segment(off + n, n);
    zb.segment(i * n, n) = xi.segment(off + 2 * n, n);
    eb.segment(i * n, n) = xi.segment(off + 3 * n, n);
    off += 4 * n;
  }

  // Reconstruct original coordinates to evaluate phi' and psi.
  ClosedLoopState state;
  state.x = kron_apply(U, xb, n, false) + reference.x_bar;
  state.v = kron_apply(U, vb, n, false) + reference.v_bar;
  state.zeta = kron_apply(U, zb, n, false) + reference.zeta_bar;
  state.eta = kron_apply(U, eb, n, false) + reference.eta_bar;
  const Eigen::VectorXd u = control_input(gains, state);

  Eigen::VectorXd w_full(m * N), wstar_full(m * N);
  for (int i = 0; i < N; ++i) {
    const auto& nl = agent_nonlinearity(nls, i);
    const Eigen::VectorXd ws = nl.residual(reference.u_bar.segment(i * m, m), t);
    w_full.segment(i * m, m) = nl.residual(u.segment(i * m, m), t) - ws;
    wstar_full.segment(i * m, m) = ws;
  }
  const Eigen::VectorXd g_full =
      psi_transform(objs, state.x) - psi_transform(objs, reference.x_bar);

  const Eigen::VectorXd wb = kron_apply(U, w_full, m, true);
  const Eigen::VectorXd wsb = kron_apply(U, wstar_full, m, true);
  const Eigen::VectorXd gb = kron_apply(U, g_full, n, true);
  const Eigen::VectorXd ub = kron_apply(U, u - reference.u_bar, m, true);

  Eigen::VectorXd d(xi.size());
  d.segment(0, 3 * n) = blocks.A1 * xi.segment(0, 3 * n) + blocks.B1 * ub.segment(0, m) -
                        blocks.B1 * wb.segment(0, m) - blocks.L1 * gb.segment(0, n) -
                        blocks.B1 * wsb.segment(0, m);
  off = 3 * n;
  for (int i = 1; i < N; ++i) {
    d.segment(off, 4 * n) = blocks.Ai(graph.eigenvalues(i)) * xi.segment(off, 4 * n) +
                            blocks.Bprime * ub.segment(i * m, m) -
                            blocks.Bprime * wb.segment(i * m, m) -
                            blocks.Lprime * gb.segment(i * n, n) -
                            blocks.Bprime * wsb.segment(i * m, m);
    off += 4 * n;
  }
  return d;
}

}  // namespace doccoord

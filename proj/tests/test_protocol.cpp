#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bench_fixture.hpp"
#include "doccoord/errors.hpp"
#include "doccoord/protocol.hpp"

using namespace doccoord;
using bench::vec2;

TEST_CASE("agent model validation") {
  CHECK(bench::model().n() == 2);
  CHECK(bench::model().m() == 2);

  // Unstable open loop but stabilizable through an invertible B0.
  Eigen::MatrixXd A(1, 1), Bzero(1, 1);
  A << 1.0;
  Bzero << 0.0;
  CHECK_THROWS_AS(AgentModel(A, Bzero), ConfigError);
  CHECK_FALSE(is_stabilizable(A, Bzero));

  // Tall B0 (m < n) cannot have full row rank.
  Eigen::MatrixXd A2 = Eigen::Matrix2d::Identity();
  Eigen::MatrixXd Bthin(2, 1);
  Bthin << 1, 0;
  CHECK_THROWS_AS(AgentModel(A2, Bthin), ConfigError);
}

TEST_CASE("control input") {
  const GainSet g = bench::gains();
  ClosedLoopState zero{Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10),
                       Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)};
  CHECK(control_input(g, zero).norm() == 0.0);

  GainSet ident;
  ident.K1 = Eigen::Matrix2d::Identity();
  ident.K2 = Eigen::Matrix2d::Zero();
  ident.K3 = Eigen::Matrix2d::Zero();
  ident.K4 = Eigen::Matrix2d::Zero();
  ClosedLoopState s1{vec2(1, 2), vec2(9, 9), vec2(9, 9), vec2(9, 9)};
  CHECK((control_input(ident, s1) - vec2(1, 2)).norm() == 0.0);

  ClosedLoopState bad{Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(8),
                      Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)};
  CHECK_THROWS_AS(control_input(g, bad), DimensionMismatch);

  // Locality: u_i depends on agent i's own block only.
  ClosedLoopState s{Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10),
                    Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)};
  s.x.segment(0, 2) = vec2(1, -1);
  const Eigen::VectorXd u = control_input(g, s);
  CHECK(u.segment(2, 8).norm() == 0.0);
  CHECK(u.segment(0, 2).norm() > 0.0);
}

TEST_CASE("controller derivatives") {
  const NetworkGraph g = bench::graph();
  const ObjectiveSet objs = bench::objectives();

  // Consensus state: v_dot = 0 and zeta_dot = -grad f.
  Eigen::VectorXd xc(10);
  for (int i = 0; i < 5; ++i) xc.segment(2 * i, 2) = vec2(0.3, -0.7);
  ClosedLoopState s{xc, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10),
                    Eigen::VectorXd::Zero(10)};
  const ControllerDerivatives d = controller_derivatives(g, objs, s);
  CHECK(d.v_dot.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((d.zeta_dot + objs.stacked_gradient(xc)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((d.eta_dot - xc).cwiseAbs().maxCoeff() == 0.0);

  // Two-agent path, one Laplacian row by hand.
  const NetworkGraph p2(2, {{1, 2, 1.0}});
  const Eigen::MatrixXd Q = Eigen::Matrix2d::Identity();
  ObjectiveSet o2({std::make_shared<QuadraticObjective>(Q, vec2(0, 0)),
                   std::make_shared<QuadraticObjective>(Q, vec2(0, 0))});
  Eigen::VectorXd x2(4);
  x2 << 1, 0, 0, 0;
  ClosedLoopState s2{x2, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4),
                     Eigen::VectorXd::Zero(4)};
  const ControllerDerivatives d2 = controller_derivatives(p2, o2, s2);
  CHECK((d2.v_dot.segment(0, 2) - vec2(-1, 0)).norm() == 0.0);
  CHECK((d2.v_dot.segment(2, 2) - vec2(1, 0)).norm() == 0.0);

  // Dense-Laplacian oracle on the benchmark graph.
  const LaplacianSpectrum spec = build_laplacian(g);
  Eigen::VectorXd xr(10);
  xr << 0.3, -1.2, 0.8, 0.1, -0.4, 0.9, 1.5, -0.3, 0.2, 0.6;
  ClosedLoopState sr{xr, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10),
                     Eigen::VectorXd::Zero(10)};
  const ControllerDerivatives dr = controller_derivatives(g, objs, sr);
  Eigen::VectorXd lx = Eigen::VectorXd::Zero(10);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) lx.segment(2 * i, 2) += spec.laplacian(i, j) * xr.segment(2 * j, 2);
  CHECK((dr.v_dot + lx).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("reference point") {
  const AgentModel model = bench::model();
  const LaplacianSpectrum spec = build_laplacian(bench::graph());
  const ObjectiveSet objs = bench::objectives();
  const GainSet gains = bench::gains();

  const ReferencePoint ref = solve_reference_point(model, bench::bounds(), spec, objs, gains);
  CHECK((ref.x_star - vec2(-0.5, 0.5)).norm() <= 1e-12);
  for (int i = 0; i < 5; ++i) {
    CHECK((ref.u_bar.segment(2 * i, 2) - bench::u_bar_agent()).norm() <= 1e-12);
  }
  // v_bar_3 = grad f_3(x*) = 0 (centered at the optimizer).
  CHECK(ref.v_bar.segment(4, 2).norm() <= 1e-13);
  // zeta_bar = x_bar.
  CHECK((ref.zeta_bar - ref.x_bar).norm() == 0.0);
  // Conservation-compatible: sum_i v_bar_i = 0.
  Eigen::Vector2d vsum = Eigen::Vector2d::Zero();
  for (int i = 0; i < 5; ++i) vsum += ref.v_bar.segment(2 * i, 2);
  CHECK(vsum.norm() <= 1e-13);

  // The reference is an equilibrium of the controller dynamics.
  ClosedLoopState bar{ref.x_bar, ref.v_bar, ref.zeta_bar, ref.eta_bar};
  const ControllerDerivatives d = controller_derivatives(bench::graph(), objs, bar);
  CHECK(d.v_dot.norm() <= 1e-8);
  CHECK(d.zeta_dot.norm() <= 1e-8);
  CHECK(d.eta_dot.norm() <= 1e-8);
  // And u_bar reproduces the steady-state input equation.
  CHECK((control_input(gains, bar) - ref.u_bar).norm() <= 1e-8);

  // A = 0 forces u_bar = 0 (minimum-norm solution of B u = 0).
  Eigen::MatrixXd Az = Eigen::Matrix2d::Zero(), B0 = bench::model().B0();
  const AgentModel still(Az, B0);
  const ReferencePoint ref0 =
      solve_reference_point(still, bench::bounds(), spec, objs, gains);
  CHECK(ref0.u_bar.norm() <= 1e-12);
  CHECK((ref0.v_bar - objs.stacked_gradient(ref0.x_bar)).norm() <= 1e-12);
}

TEST_CASE("transformed block coefficients") {
  const AgentModel model = bench::model();
  const ObjectiveSet objs = bench::objectives();  // ell = 1.1
  const LaplacianSpectrum spec = build_laplacian(bench::path_graph());
  const TransformedBlocks blk =
      assemble_transformed_blocks(model, bench::bounds(), spec, objs);
  const int n = 2;

  // A_i at lambda = 1: v-row first block is -I, zeta-row first block -(1+ell) I.
  const Eigen::MatrixXd Ai = blk.Ai(1.0);
  CHECK((Ai.block(n, 0, n, n) + Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK((Ai.block(2 * n, 0, n, n) + 2.1 * Eigen::Matrix2d::Identity()).norm() <= 1e-15);
  CHECK((Ai.block(2 * n, n, n, n) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK((Ai.block(3 * n, 2 * n, n, n) + Eigen::Matrix2d::Identity()).norm() == 0.0);

  // Block-1 second row block is -ell I.
  CHECK((blk.A1.block(n, 0, n, n) + 1.1 * Eigen::Matrix2d::Identity()).norm() <= 1e-15);
  CHECK(blk.A1.block(n, n, n, 2 * n).norm() == 0.0);

  // L' = [0; 0; -ell I; 0]: the gradient channel feeds +ell g into the zeta row.
  CHECK((blk.Lprime.block(2 * n, 0, n, n) + 1.1 * Eigen::Matrix2d::Identity()).norm() <= 1e-15);
  CHECK(blk.Lprime.topRows(2 * n).norm() == 0.0);
  CHECK(blk.Lprime.bottomRows(n).norm() == 0.0);
}

TEST_CASE("shifted transformed derivative") {
  const AgentModel model = bench::model();
  const ObjectiveSet objs = bench::objectives();
  const LaplacianSpectrum spec = build_laplacian(bench::graph());
  const GainSet gains = bench::gains();
  const SectorBounds bnd = bench::bounds();
  const auto nls = bench::nonlinearities();
  const TransformedBlocks blk = assemble_transformed_blocks(model, bnd, spec, objs);
  const ReferencePoint ref = solve_reference_point(model, bnd, spec, objs, gains);
  const int dim = 3 * 2 + 4 * 2 * 4;

  // Identity nonlinearity: the shifted origin is an equilibrium.
  {
    std::vector<InputNonlinearity> ident = {InputNonlinearity::identity()};
    SectorBounds ib = ident[0].bounds();
    const ReferencePoint r2 = solve_reference_point(model, ib, spec, objs, gains);
    const TransformedBlocks b2 = assemble_transformed_blocks(model, ib, spec, objs);
    const Eigen::VectorXd d = shifted_transformed_derivative(
        b2, gains, r2, spec, objs, ident, 0.37, Eigen::VectorXd::Zero(dim));
    CHECK(d.norm() <= 1e-12);
  }

  // Benchmark nonlinearity at xi = 0: the residual of u_bar drives the x-rows
  // through -B. At t = pi/4 the sinusoid hits its peak and phi'(u_bar) = 0.
  {
    const Eigen::VectorXd d0 = shifted_transformed_derivative(
        blk, gains, ref, spec, objs, nls, 0.0, Eigen::VectorXd::Zero(dim));
    // Expected: block-1 x-rows get -B * sqrt(5) * phi'(u_bar, 0); w* vanishes
    // on blocks 2..N because u_bar is agent-uniform.
    const Eigen::VectorXd ws = nls[0].residual(bench::u_bar_agent(), 0.0);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(dim);
    expected.segment(0, 2) = -model.B(bnd) * (std::sqrt(5.0) * ws);
    CHECK((d0 - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(d0.norm() > 1e-3);

    const Eigen::VectorXd dq = shifted_transformed_derivative(
        blk, gains, ref, spec, objs, nls, M_PI / 4.0, Eigen::VectorXd::Zero(dim));
    CHECK(dq.norm() <= 1e-12);
  }

  // With w = g = w* = 0 the map is the block-diagonal linear part.
  {
    std::vector<InputNonlinearity> ident = {InputNonlinearity::identity()};
    SectorBounds ib = ident[0].bounds();
    const ReferencePoint r2 = solve_reference_point(model, ib, spec, objs, gains);
    const TransformedBlocks b2 = assemble_transformed_blocks(model, ib, spec, objs);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(dim);
    xi(0) = 1.0;
    xi(7) = -0.5;
    const Eigen::VectorXd d = shifted_transformed_derivative(
        b2, gains, r2, spec, objs, ident, 0.0, xi);
    // Oracle: assemble the closed block-diagonal map (note g = 0 only because
    // the benchmark objectives make psi constant).
    const Eigen::MatrixXd Kc = gains.stacked_check();
    const Eigen::MatrixXd K = gains.stacked();
    Eigen::VectorXd expect(dim);
    expect.segment(0, 6) = (b2.A1 + b2.B1 * Kc) * xi.segment(0, 6);
    int off = 6;
    for (int i = 1; i < 5; ++i) {
      expect.segment(off, 8) =
          (b2.Ai(spec.eigenvalues(i)) + b2.Bprime * K) * xi.segment(off, 8);
      off += 8;
    }
    CHECK((d - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

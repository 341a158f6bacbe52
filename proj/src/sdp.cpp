#include "doccoord/sdp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "doccoord/errors.hpp"

namespace doccoord::sdp {

namespace {

Eigen::MatrixXd cone_slack(const MatrixCone& cone, const Eigen::VectorXd& y) {
  Eigen::MatrixXd S = cone.constant;
  for (int k = 0; k < y.size(); ++k) {
    if (cone.coeffs[static_cast<std::size_t>(k)].size() != 0 && y(k) != 0.0) {
      S += y(k) * cone.coeffs[static_cast<std::size_t>(k)];
    }
  }
  return S;
}

// -sum_j log det S_j(y), or +inf outside the cone.
double barrier_value(const Problem& prob, const Eigen::VectorXd& y) {
  double val = 0.0;
  for (const auto& cone : prob.cones) {
    Eigen::LLT<Eigen::MatrixXd> llt(cone_slack(cone, y));
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    val -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return val;
}

}  // namespace

bool is_strictly_feasible(const Problem& prob, const Eigen::VectorXd& y) {
  return std::isfinite(barrier_value(prob, y));
}

Result minimize(const Problem& prob, const Eigen::VectorXd& y0, const Options& opts) {
  const int K = prob.num_vars;
  if (y0.size() != K || prob.cost.size() != K) {
    throw DimensionMismatch("sdp: variable count mismatch");
  }
  for (const auto& cone : prob.cones) {
    if (static_cast<int>(cone.coeffs.size()) != K) {
      throw DimensionMismatch("sdp: each cone needs one coefficient per variable");
    }
  }

  Result res;
  res.y = y0;
  if (!is_strictly_feasible(prob, res.y)) {
    throw NumericalFailure("sdp: starting point is not strictly feasible");
  }

  double total_dim = 0.0;
  for (const auto& cone : prob.cones) total_dim += static_cast<double>(cone.constant.rows());

  double tau = opts.tau0;
  Eigen::VectorXd grad(K);
  Eigen::MatrixXd hess(K, K);

  while (true) {
    bool centered = false;
    double last_decrement2 = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      grad = tau * prob.cost;
      hess.setZero();
      for (const auto& cone : prob.cones) {
        const Eigen::MatrixXd S = cone_slack(cone, res.y);
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
          throw NumericalFailure("sdp: iterate left the cone");
        }
        const Eigen::MatrixXd L = llt.matrixL();
        // M_k = L^-1 A_k L^-T; grad_k = -tr(M_k); hess_kl = <M_k, M_l>_F.
        std::vector<Eigen::MatrixXd> M(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
          const auto& Ak = cone.coeffs[static_cast<std::size_t>(k)];
          if (Ak.size() == 0) continue;
          Eigen::MatrixXd X = L.triangularView<Eigen::Lower>().solve(Ak);
          M[static_cast<std::size_t>(k)] =
              L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
          grad(k) -= M[static_cast<std::size_t>(k)].trace();
        }
        for (int k = 0; k < K; ++k) {
          if (M[static_cast<std::size_t>(k)].size() == 0) continue;
          for (int l = k; l < K; ++l) {
            if (M[static_cast<std::size_t>(l)].size() == 0) continue;
            const double h = (M[static_cast<std::size_t>(k)].array() *
                              M[static_cast<std::size_t>(l)].array())
                                 .sum();
            hess(k, l) += h;
            if (l != k) hess(l, k) += h;
          }
        }
      }

      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = -ldlt.solve(grad);
      if (!step.allFinite() || ldlt.info() != Eigen::Success) {
        Eigen::MatrixXd regular = hess;
        regular.diagonal().array() += 1e-10 * (1.0 + hess.diagonal().maxCoeff());
        step = -regular.ldlt().solve(grad);
        if (!step.allFinite()) throw NumericalFailure("sdp: Newton system is singular");
      }
      const double decrement2 = -grad.dot(step);
      last_decrement2 = decrement2;
      ++res.newton_iterations;
      if (decrement2 / 2.0 <= opts.newton_tol) {
        centered = true;
        break;
      }

      const double f0 = tau * prob.cost.dot(res.y) + barrier_value(prob, res.y);
      double alpha = 1.0;
      const double slope = grad.dot(step);
      while (alpha >= opts.min_step) {
        Eigen::VectorXd cand = res.y + alpha * step;
        const double f1 = tau * prob.cost.dot(cand) + barrier_value(prob, cand);
        if (std::isfinite(f1) && f1 <= f0 + 0.25 * alpha * slope) {
          res.y = cand;
          break;
        }
        alpha *= 0.5;
      }
      if (alpha < opts.min_step) break;  // stalled; centering is good enough
    }

    if (total_dim / tau <= opts.gap_tol) {
      // A line-search stall with a tiny residual decrement is double-precision
      // convergence; a stall with a large decrement is a genuine failure.
      res.converged = centered || last_decrement2 / 2.0 <= 1e-6;
      break;
    }
    tau *= opts.tau_growth;
  }
  return res;
}

}  // namespace doccoord::sdp

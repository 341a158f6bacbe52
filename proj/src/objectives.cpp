#include "doccoord/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "doccoord/errors.hpp"

namespace doccoord {

namespace {

void require_finite(const Eigen::VectorXd& x, const char* who) {
  if (!x.allFinite()) {
    throw NonFinite(std::string(who) + ": input contains NaN/Inf");
  }
}

}  // namespace

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd curvature, Eigen::VectorXd center)
    : curvature_(std::move(curvature)), center_(std::move(center)) {
  if (curvature_.rows() != curvature_.cols() || curvature_.rows() != center_.size()) {
    throw DimensionMismatch("quadratic objective: Q must be n x n matching c");
  }
  if ((curvature_ - curvature_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("quadratic objective: Q not symmetric within 1e-12");
  }
  curvature_ = 0.5 * (curvature_ + curvature_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(curvature_);
  min_eig_ = es.eigenvalues().minCoeff();
  max_eig_ = es.eigenvalues().maxCoeff();
  if (min_eig_ <= 0.0) {
    throw ConfigError("quadratic objective: Q must be positive definite");
  }
}

double QuadraticObjective::value(const Eigen::VectorXd& x) const {
  Eigen::VectorXd d = x - center_;
  return 0.5 * d.dot(curvature_ * d);
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& x) const {
  return curvature_ * (x - center_);
}

ObjectiveSet::ObjectiveSet(std::vector<std::shared_ptr<const Objective>> locals,
                           std::optional<double> mu, std::optional<double> ell)
    : locals_(std::move(locals)) {
  if (locals_.empty()) throw ConfigError("objective set must not be empty");
  dim_ = locals_[0]->dim();
  for (const auto& o : locals_) {
    if (!o) throw ConfigError("null objective");
    if (o->dim() != dim_) throw DimensionMismatch("objectives have inconsistent dimensions");
  }

  double qmin = std::numeric_limits<double>::infinity();
  double qmax = 0.0;
  bool quad = true;
  for (const auto& o : locals_) {
    if (auto* q = dynamic_cast<const QuadraticObjective*>(o.get())) {
      qmin = std::min(qmin, q->min_curvature());
      qmax = std::max(qmax, q->max_curvature());
    } else {
      quad = false;
    }
  }
  if (mu && ell) {
    mu_ = *mu;
    ell_ = *ell;
  } else if (quad) {
    mu_ = mu.value_or(qmin);
    ell_ = ell.value_or(qmax);
  } else {
    throw ConfigError("mu and ell must be declared for non-quadratic objectives");
  }
  if (!(mu_ > 0.0) || !(ell_ >= mu_)) {
    throw ConfigError("need 0 < mu <= ell, got mu=" + std::to_string(mu_) +
                      " ell=" + std::to_string(ell_));
  }
  if (quad && (mu_ > qmin + 1e-12 || ell_ < qmax - 1e-12)) {
    throw ConfigError("declared (mu, ell) do not cover the quadratic curvature range [" +
                      std::to_string(qmin) + ", " + std::to_string(qmax) + "]");
  }
}

bool ObjectiveSet::all_quadratic() const {
  for (const auto& o : locals_) {
    if (!dynamic_cast<const QuadraticObjective*>(o.get())) return false;
  }
  return true;
}

double ObjectiveSet::total_value(const Eigen::VectorXd& z) const {
  double s = 0.0;
  for (const auto& o : locals_) s += o->value(z);
  return s;
}

double ObjectiveSet::stacked_value(const Eigen::VectorXd& x) const {
  if (x.size() != dim_ * num_agents()) {
    throw DimensionMismatch("stacked_value: expected nN vector");
  }
  double s = 0.0;
  for (int i = 0; i < num_agents(); ++i) {
    s += locals_[static_cast<std::size_t>(i)]->value(x.segment(i * dim_, dim_));
  }
  return s;
}

Eigen::VectorXd ObjectiveSet::stacked_gradient(const Eigen::VectorXd& x) const {
  if (x.size() != dim_ * num_agents()) {
    throw DimensionMismatch("stacked_gradient: expected nN vector");
  }
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < num_agents(); ++i) {
    g.segment(i * dim_, dim_) =
        locals_[static_cast<std::size_t>(i)]->gradient(x.segment(i * dim_, dim_));
  }
  return g;
}

Eigen::VectorXd gradient(const Objective& obj, const Eigen::VectorXd& x) {
  require_finite(x, "gradient");
  return obj.gradient(x);
}

Eigen::VectorXd psi_transform(const ObjectiveSet& objs, const Eigen::VectorXd& x) {
  require_finite(x, "psi_transform");
  return x - objs.stacked_gradient(x) / objs.ell();
}

Eigen::VectorXd solve_global_optimizer(const ObjectiveSet& objs, const OptimizerOptions& opts) {
  const int n = objs.dim();
  const int N = objs.num_agents();

  auto total_gradient = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < N; ++i) g += objs.local(i).gradient(z);
    return g;
  };

  if (objs.all_quadratic()) {
    Eigen::MatrixXd Qsum = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < N; ++i) {
      const auto& q = static_cast<const QuadraticObjective&>(objs.local(i));
      Qsum += q.curvature();
      rhs += q.curvature() * q.center();
    }
    Eigen::VectorXd xstar = Qsum.ldlt().solve(rhs);
    if (total_gradient(xstar).norm() > opts.residual_tol) {
      throw NoConvergence("closed-form optimizer residual above tolerance");
    }
    return xstar;
  }

  // Damped gradient descent on the sum; step 1/(N*ell) is safe under the
  // declared Lipschitz constant.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  const double step = 1.0 / (static_cast<double>(N) * objs.ell());
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::VectorXd g = total_gradient(z);
    if (g.norm() <= opts.residual_tol) return z;
    z -= step * g;
  }
  throw NoConvergence("gradient descent did not reach the residual tolerance");
}

SectorReport verify_psi_sector(
    const ObjectiveSet& objs,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples) {
  SectorReport rep;
  const double mup = objs.mu_prime();
  bool first = true;
  for (const auto& [x, xp] : samples) {
    Eigen::VectorXd d = psi_transform(objs, xp) - psi_transform(objs, x);
    double lhs = d.dot(d - mup * (xp - x));
    rep.max_violation = first ? lhs : std::max(rep.max_violation, lhs);
    first = false;
    ++rep.num_samples;
  }
  return rep;
}

}  // namespace doccoord

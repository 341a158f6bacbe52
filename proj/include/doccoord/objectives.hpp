#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace doccoord {

/// One agent's private objective: value and gradient.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
};

/// f(x) = 1/2 (x-c)^T Q (x-c) with Q symmetric positive definite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Eigen::MatrixXd curvature, Eigen::VectorXd center);

  int dim() const override { return static_cast<int>(center_.size()); }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;

  const Eigen::MatrixXd& curvature() const { return curvature_; }
  const Eigen::VectorXd& center() const { return center_; }
  double min_curvature() const { return min_eig_; }
  double max_curvature() const { return max_eig_; }

 private:
  Eigen::MatrixXd curvature_;
  Eigen::VectorXd center_;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

/// User-supplied objective; strong-convexity and Lipschitz constants are the
/// caller's declaration and are validated only by sampling.
class CustomObjective final : public Objective {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  CustomObjective(int dim, ValueFn value, GradFn gradient)
      : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)) {}

  int dim() const override { return dim_; }
  double value(const Eigen::VectorXd& x) const override { return value_(x); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override { return gradient_(x); }

 private:
  int dim_;
  ValueFn value_;
  GradFn gradient_;
};

/// The N local objectives plus the shared constants mu (strong convexity)
/// and ell (gradient Lipschitz). For all-quadratic sets the constants can be
/// computed from curvature eigenvalue ranges; declared values are validated
/// against them.
class ObjectiveSet {
 public:
  ObjectiveSet(std::vector<std::shared_ptr<const Objective>> locals,
               std::optional<double> mu = std::nullopt,
               std::optional<double> ell = std::nullopt);

  int num_agents() const { return static_cast<int>(locals_.size()); }
  int dim() const { return dim_; }
  double mu() const { return mu_; }
  double ell() const { return ell_; }
  /// mu' = (ell - mu)/ell, the [0, mu'] sector bound of the psi residual.
  double mu_prime() const { return (ell_ - mu_) / ell_; }
  const Objective& local(int i) const { return *locals_[static_cast<std::size_t>(i)]; }

  bool all_quadratic() const;

  /// Sum of local values at a common point z.
  double total_value(const Eigen::VectorXd& z) const;
  /// Sum of local values evaluated agent-wise on a stacked nN vector.
  double stacked_value(const Eigen::VectorXd& x_stacked) const;
  /// Stacked gradient [grad f_1(x_1); ...; grad f_N(x_N)].
  Eigen::VectorXd stacked_gradient(const Eigen::VectorXd& x_stacked) const;

 private:
  std::vector<std::shared_ptr<const Objective>> locals_;
  int dim_;
  double mu_;
  double ell_;
};

/// Gradient of one local objective; rejects non-finite input.
Eigen::VectorXd gradient(const Objective& obj, const Eigen::VectorXd& x);

/// psi(x) = x - (1/ell) grad f(x), applied agent-wise on a stacked vector.
Eigen::VectorXd psi_transform(const ObjectiveSet& objs, const Eigen::VectorXd& x_stacked);

struct OptimizerOptions {
  double residual_tol = 1e-10;   // on || sum_i grad f_i(x*) ||
  int max_iterations = 2000000;  // iterative path only
};

/// Unique minimizer of sum_i f_i(z). Closed form for all-quadratic sets,
/// damped gradient descent otherwise.
Eigen::VectorXd solve_global_optimizer(const ObjectiveSet& objs,
                                       const OptimizerOptions& opts = {});

struct SectorReport {
  double max_violation = 0.0;  // positive = inequality violated
  int num_samples = 0;
};

/// Evaluates the incremental psi sector inequality
///   (psi(x')-psi(x))^T [(psi(x')-psi(x)) - mu'(x'-x)] <= 0
/// on the given pairs of stacked vectors and reports the worst value.
SectorReport verify_psi_sector(const ObjectiveSet& objs,
                               const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples);

}  // namespace doccoord

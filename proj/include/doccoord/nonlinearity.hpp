#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace doccoord {

/// Incremental sector [alpha, beta] of the raw nonlinearity plus the declared
/// residual bound gamma for phi'(u,t) = u - phi(u,t)/beta. gamma may be
/// declared larger than the tight (beta-alpha)/beta.
struct SectorBounds {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
};

/// (beta - alpha) / beta; throws InvalidBounds unless 0 < alpha <= beta.
double tight_gamma(const SectorBounds& bounds);

/// Validates 0 < alpha <= beta, gamma in [tight, 1].
void validate_bounds(const SectorBounds& bounds);

/// Component-wise input nonlinearity phi(u, t) with phi(0, t) = 0.
class InputNonlinearity {
 public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

  static InputNonlinearity identity();
  /// phi(u,t)_j = (base + amp*sin(freq*t)) u_j.
  static InputNonlinearity sinusoidal_gain(double base, double amp, double freq,
                                           SectorBounds bounds);
  /// Static piecewise-linear nonlinearity through the origin: slope[k] on
  /// [breakpoints[k], breakpoints[k+1]); breakpoints must straddle 0.
  static InputNonlinearity slope_table(std::vector<double> breakpoints,
                                       std::vector<double> slopes, SectorBounds bounds);
  /// Arbitrary callable with self-declared bounds (sampling checks only).
  static InputNonlinearity custom(Fn fn, SectorBounds bounds);

  const SectorBounds& bounds() const { return bounds_; }
  const std::string& kind() const { return kind_; }

  /// phi(u, t); component-wise for the built-in kinds.
  Eigen::VectorXd apply(const Eigen::VectorXd& u, double t) const;
  /// phi'(u, t) = u - phi(u, t)/beta, the [0, gamma]-sector residual.
  Eigen::VectorXd residual(const Eigen::VectorXd& u, double t) const;

 private:
  InputNonlinearity(std::string kind, Fn fn, SectorBounds bounds);

  std::string kind_;
  Fn fn_;
  SectorBounds bounds_;
};

struct SectorSample {
  Eigen::VectorXd u;
  Eigen::VectorXd u_prime;
  double t = 0.0;
};

struct NonlinearitySectorReport {
  double max_plain_violation = 0.0;        // phi'(u)^T (phi'(u) - gamma u)
  double max_incremental_violation = 0.0;  // incremental residual inequality
  double max_slope_violation = 0.0;        // component slopes outside [alpha, beta]
  double max_zero_violation = 0.0;         // ||phi(0, t)|| over sampled times
  int num_samples = 0;
  bool pass(double tol = 1e-12) const {
    return max_plain_violation <= tol && max_incremental_violation <= tol &&
           max_slope_violation <= tol && max_zero_violation <= tol;
  }
};

/// Samples the plain and incremental residual sector inequalities plus the
/// component-wise incremental slope bounds of the raw nonlinearity.
NonlinearitySectorReport verify_sector(const InputNonlinearity& nl,
                                       const std::vector<SectorSample>& samples);

}  // namespace doccoord

#include "doccoord/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "doccoord/errors.hpp"

namespace doccoord {

double tight_gamma(const SectorBounds& bounds) {
  if (!(bounds.alpha > 0.0) || !(bounds.beta >= bounds.alpha)) {
    throw InvalidBounds("need 0 < alpha <= beta, got alpha=" + std::to_string(bounds.alpha) +
                        " beta=" + std::to_string(bounds.beta));
  }
  return (bounds.beta - bounds.alpha) / bounds.beta;
}

void validate_bounds(const SectorBounds& bounds) {
  const double tight = tight_gamma(bounds);
  if (bounds.gamma < tight - 1e-12 || bounds.gamma > 1.0 + 1e-12) {
    throw InvalidBounds("gamma=" + std::to_string(bounds.gamma) +
                        " must lie in [(beta-alpha)/beta, 1] = [" + std::to_string(tight) + ", 1]");
  }
}

InputNonlinearity::InputNonlinearity(std::string kind, Fn fn, SectorBounds bounds)
    : kind_(std::move(kind)), fn_(std::move(fn)), bounds_(bounds) {
  validate_bounds(bounds_);
}

InputNonlinearity InputNonlinearity::identity() {
  return InputNonlinearity(
      "identity", [](const Eigen::VectorXd& u, double) { return u; },
      SectorBounds{1.0, 1.0, 0.0});
}

InputNonlinearity InputNonlinearity::sinusoidal_gain(double base, double amp, double freq,
                                                     SectorBounds bounds) {
  return InputNonlinearity(
      "sinusoidal_gain",
      [base, amp, freq](const Eigen::VectorXd& u, double t) {
        return ((base + amp * std::sin(freq * t)) * u).eval();
      },
      bounds);
}

InputNonlinearity InputNonlinearity::slope_table(std::vector<double> breakpoints,
                                                 std::vector<double> slopes,
                                                 SectorBounds bounds) {
  if (breakpoints.size() + 1 != slopes.size()) {
    throw ConfigError("slope_table: need one more slope than breakpoints");
  }
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw ConfigError("slope_table: breakpoints must be ascending");
  }
  // Scalar map with phi(0) = 0: integrate the slope field from 0.
  auto scalar = [bp = std::move(breakpoints), sl = std::move(slopes)](double v) {
    double y = 0.0, x = 0.0;
    if (v >= 0.0) {
      std::size_t k = 0;
      while (k < bp.size() && bp[k] <= 0.0) ++k;
      for (; k < bp.size() && bp[k] < v; ++k) {
        y += sl[k] * (bp[k] - x);
        x = bp[k];
      }
      std::size_t seg = k < bp.size() ? k : bp.size();
      y += sl[seg] * (v - x);
    } else {
      int k = static_cast<int>(bp.size()) - 1;
      while (k >= 0 && bp[static_cast<std::size_t>(k)] >= 0.0) --k;
      for (; k >= 0 && bp[static_cast<std::size_t>(k)] > v; --k) {
        y += sl[static_cast<std::size_t>(k) + 1] * (bp[static_cast<std::size_t>(k)] - x);
        x = bp[static_cast<std::size_t>(k)];
      }
      y += sl[static_cast<std::size_t>(k + 1)] * (v - x);
    }
    return y;
  };
  return InputNonlinearity(
      "slope_table",
      [scalar](const Eigen::VectorXd& u, double) {
        Eigen::VectorXd out(u.size());
        for (Eigen::Index j = 0; j < u.size(); ++j) out(j) = scalar(u(j));
        return out;
      },
      bounds);
}

InputNonlinearity InputNonlinearity::custom(Fn fn, SectorBounds bounds) {
  return InputNonlinearity("custom", std::move(fn), bounds);
}

Eigen::VectorXd InputNonlinearity::apply(const Eigen::VectorXd& u, double t) const {
  if (!u.allFinite() || !std::isfinite(t)) {
    throw NonFinite("nonlinearity input contains NaN/Inf");
  }
  return fn_(u, t);
}

Eigen::VectorXd InputNonlinearity::residual(const Eigen::VectorXd& u, double t) const {
  return u - apply(u, t) / bounds_.beta;
}

NonlinearitySectorReport verify_sector(const InputNonlinearity& nl,
                                       const std::vector<SectorSample>& samples) {
  NonlinearitySectorReport rep;
  const double gamma = nl.bounds().gamma;
  const double alpha = nl.bounds().alpha;
  const double beta = nl.bounds().beta;
  bool first = true;
  for (const auto& s : samples) {
    rep.max_zero_violation = std::max(
        rep.max_zero_violation, nl.apply(Eigen::VectorXd::Zero(s.u.size()), s.t).norm());
    Eigen::VectorXd r = nl.residual(s.u, s.t);
    Eigen::VectorXd rp = nl.residual(s.u_prime, s.t);
    const double plain = r.dot(r - gamma * s.u);
    Eigen::VectorXd d = rp - r;
    const double incr = d.dot(d - gamma * (s.u_prime - s.u));

    // Component-wise incremental slope of the raw nonlinearity.
    Eigen::VectorXd pu = nl.apply(s.u, s.t);
    Eigen::VectorXd pup = nl.apply(s.u_prime, s.t);
    double slope_violation = 0.0;
    for (Eigen::Index j = 0; j < s.u.size(); ++j) {
      const double du = s.u_prime(j) - s.u(j);
      if (std::abs(du) < 1e-12) continue;
      const double slope = (pup(j) - pu(j)) / du;
      slope_violation = std::max(slope_violation, std::max(alpha - slope, slope - beta));
    }

    if (first) {
      rep.max_plain_violation = plain;
      rep.max_incremental_violation = incr;
      rep.max_slope_violation = slope_violation;
      first = false;
    } else {
      rep.max_plain_violation = std::max(rep.max_plain_violation, plain);
      rep.max_incremental_violation = std::max(rep.max_incremental_violation, incr);
      rep.max_slope_violation = std::max(rep.max_slope_violation, slope_violation);
    }
    ++rep.num_samples;
  }
  return rep;
}

}  // namespace doccoord

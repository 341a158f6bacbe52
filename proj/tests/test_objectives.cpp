#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "doccoord/errors.hpp"
#include "doccoord/objectives.hpp"

using namespace doccoord;

namespace {

Eigen::Vector2d vec2(double a, double b) { return Eigen::Vector2d(a, b); }

// The five benchmark objectives: f_i(x) = (1.1/2) ||x - c_i||^2.
ObjectiveSet bench_objectives(double mu = 1.0, double ell = 1.1) {
  const Eigen::MatrixXd Q = 1.1 * Eigen::Matrix2d::Identity();
  std::vector<std::shared_ptr<const Objective>> locals;
  for (auto c : {vec2(-1, 0), vec2(-0.75, 0.25), vec2(-0.5, 0.5), vec2(-0.25, 0.75), vec2(0, 1)}) {
    locals.push_back(std::make_shared<QuadraticObjective>(Q, c));
  }
  return ObjectiveSet(std::move(locals), mu, ell);
}

}  // namespace

TEST_CASE("quadratic gradients at known points") {
  const ObjectiveSet objs = bench_objectives();
  CHECK(gradient(objs.local(4), vec2(0, 1)).norm() == 0.0);  // at its center

  const Eigen::VectorXd g1 = gradient(objs.local(0), vec2(-0.5, 0.5));
  CHECK(g1(0) == doctest::Approx(0.55).epsilon(1e-14));
  CHECK(g1(1) == doctest::Approx(0.55).epsilon(1e-14));

  CHECK(gradient(objs.local(2), vec2(-0.5, 0.5)).norm() == 0.0);

  Eigen::VectorXd bad = vec2(0, 1);
  bad(0) = std::nan("");
  CHECK_THROWS_AS(gradient(objs.local(0), bad), NonFinite);
}

TEST_CASE("finite-difference gradient agreement") {
  const ObjectiveSet objs = bench_objectives();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const int i = trial % objs.num_agents();
    Eigen::VectorXd x = vec2(unif(rng), unif(rng));
    Eigen::VectorXd g = gradient(objs.local(i), x);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double fd = (objs.local(i).value(xp) - objs.local(i).value(xm)) / (2 * h);
      CHECK(std::abs(fd - g(k)) <= 1e-5 * std::max(1.0, std::abs(g(k))));
    }
  }
}

TEST_CASE("psi transform") {
  const ObjectiveSet objs = bench_objectives();
  // At x_bar = 1 (x) x*: psi block 3 equals x* (its objective is centered there).
  Eigen::VectorXd xbar(10);
  for (int i = 0; i < 5; ++i) xbar.segment(2 * i, 2) = vec2(-0.5, 0.5);
  const Eigen::VectorXd p = psi_transform(objs, xbar);
  CHECK((p.segment(4, 2) - vec2(-0.5, 0.5)).norm() <= 1e-15);

  // mu = ell: psi collapses to the center for every input.
  auto single = ObjectiveSet({std::make_shared<QuadraticObjective>(
                                 2.0 * Eigen::Matrix2d::Identity(), vec2(3, -4))},
                             2.0, 2.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = vec2(unif(rng), unif(rng));
    CHECK((psi_transform(single, x) - vec2(3, -4)).norm() <= 1e-12);
  }

  // Zero stays zero when all gradients vanish at the origin.
  auto origin = ObjectiveSet(
      {std::make_shared<QuadraticObjective>(Eigen::Matrix2d::Identity(), vec2(0, 0))}, 1.0, 1.0);
  CHECK(psi_transform(origin, vec2(0, 0)).norm() == 0.0);
}

TEST_CASE("global optimizer") {
  const ObjectiveSet objs = bench_objectives();
  const Eigen::VectorXd xstar = solve_global_optimizer(objs);
  CHECK(std::abs(xstar(0) - (-0.5)) <= 1e-10);
  CHECK(std::abs(xstar(1) - 0.5) <= 1e-10);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 5; ++i) total += objs.local(i).gradient(xstar);
  CHECK(total.norm() <= 1e-10);

  auto single = ObjectiveSet(
      {std::make_shared<QuadraticObjective>(1.1 * Eigen::Matrix2d::Identity(), vec2(-1, 0))});
  CHECK((solve_global_optimizer(single) - vec2(-1, 0)).norm() <= 1e-12);

  auto two = ObjectiveSet(
      {std::make_shared<QuadraticObjective>(Eigen::Matrix2d::Identity(), vec2(0, 0)),
       std::make_shared<QuadraticObjective>(Eigen::Matrix2d::Identity(), vec2(2, 0))});
  CHECK((solve_global_optimizer(two) - vec2(1, 0)).norm() <= 1e-12);
}

TEST_CASE("global optimizer, iterative path for custom objectives") {
  // Same benchmark functions wrapped as opaque callables.
  std::vector<std::shared_ptr<const Objective>> locals;
  for (auto c : {vec2(-1, 0), vec2(-0.75, 0.25), vec2(-0.5, 0.5), vec2(-0.25, 0.75), vec2(0, 1)}) {
    locals.push_back(std::make_shared<CustomObjective>(
        2,
        [c](const Eigen::VectorXd& x) { return 0.55 * (x - c).squaredNorm(); },
        [c](const Eigen::VectorXd& x) { return (1.1 * (x - c)).eval(); }));
  }
  const ObjectiveSet objs(std::move(locals), 1.0, 1.1);
  CHECK_FALSE(objs.all_quadratic());
  const Eigen::VectorXd xstar = solve_global_optimizer(objs);
  CHECK((xstar - vec2(-0.5, 0.5)).norm() <= 1e-9);
}

TEST_CASE("iteration budget exhaustion raises NoConvergence") {
  std::vector<std::shared_ptr<const Objective>> locals;
  const Eigen::Vector2d c = vec2(100.0, -100.0);  // far minimizer, slow from zero start
  locals.push_back(std::make_shared<CustomObjective>(
      2, [c](const Eigen::VectorXd& x) { return 0.5 * (x - c).squaredNorm(); },
      [c](const Eigen::VectorXd& x) { return (x - c).eval(); }));
  // A deliberately conservative Lipschitz declaration slows the step to 1/100.
  const ObjectiveSet objs(std::move(locals), 0.5, 100.0);
  OptimizerOptions opts;
  opts.max_iterations = 3;
  CHECK_THROWS_AS(solve_global_optimizer(objs, opts), NoConvergence);
}

TEST_CASE("psi sector inequality sampling") {
  const ObjectiveSet objs = bench_objectives();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> samples;
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd x(10), xp(10);
    for (int c = 0; c < 10; ++c) {
      x(c) = unif(rng);
      xp(c) = unif(rng);
    }
    samples.emplace_back(x, xp);
  }
  const SectorReport rep = verify_psi_sector(objs, samples);
  CHECK(rep.num_samples == 10000);
  CHECK(rep.max_violation <= 1e-12);

  // x' = x gives exactly zero.
  const SectorReport zero = verify_psi_sector(objs, {{samples[0].first, samples[0].first}});
  CHECK(zero.max_violation == 0.0);

  // Deliberately understated ell (half the true curvature), wrapped as
  // opaque callables so the declaration is taken at face value: sampling
  // must then report positive violations.
  std::vector<std::shared_ptr<const Objective>> opaque;
  for (auto c : {vec2(-1, 0), vec2(-0.75, 0.25), vec2(-0.5, 0.5), vec2(-0.25, 0.75), vec2(0, 1)}) {
    opaque.push_back(std::make_shared<CustomObjective>(
        2, [c](const Eigen::VectorXd& x) { return 0.55 * (x - c).squaredNorm(); },
        [c](const Eigen::VectorXd& x) { return (1.1 * (x - c)).eval(); }));
  }
  const ObjectiveSet wrong(std::move(opaque), 0.5, 0.55);
  const SectorReport bad = verify_psi_sector(wrong, samples);
  CHECK(bad.max_violation > 1e-3);
}

TEST_CASE("strong convexity and Lipschitz sampling") {
  const ObjectiveSet objs = bench_objectives();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int k = 0; k < 2000; ++k) {
    const int i = k % objs.num_agents();
    const Eigen::VectorXd x = vec2(unif(rng), unif(rng));
    const Eigen::VectorXd xp = vec2(unif(rng), unif(rng));
    const double inner =
        (objs.local(i).gradient(xp) - objs.local(i).gradient(x)).dot(xp - x);
    const double d2 = (xp - x).squaredNorm();
    CHECK(inner >= objs.mu() * d2 - 1e-10);
    CHECK(inner <= objs.ell() * d2 + 1e-10);
  }
}

TEST_CASE("objective set validation") {
  const Eigen::MatrixXd Q = 1.1 * Eigen::Matrix2d::Identity();
  // Declared constants must cover the curvature range.
  CHECK_THROWS_AS(ObjectiveSet({std::make_shared<QuadraticObjective>(Q, vec2(0, 0))}, 1.0, 1.05),
                  ConfigError);
  CHECK_THROWS_AS(ObjectiveSet({std::make_shared<QuadraticObjective>(Q, vec2(0, 0))}, 0.0, 1.1),
                  ConfigError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 0, 0, -1;
  CHECK_THROWS_AS(QuadraticObjective(indef, vec2(0, 0)), ConfigError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(QuadraticObjective(asym, vec2(0, 0)), ConfigError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vhj/control.hpp"

using namespace vhj;

namespace {

const auto zero = [](Point) { return 0.0; };

Trajectory fd_run(const ProblemSpec& p, double T) {
  EvolveOptions o;
  o.sample_every = T / 100;
  return evolve(p, T, BoundaryKind::RelaxedDirichlet, o);
}

}  // namespace

TEST(Feedback, Examples) {
  EXPECT_EQ(norm(feedback_control({0, 0}, 3)), 0.0);
  EXPECT_DOUBLE_EQ(feedback_control({1, 0}, 3)[0], -3.0);
  const Point a = feedback_control({0.6, 0.8}, 3);
  EXPECT_NEAR(a[0], -1.8, 1e-14);
  EXPECT_NEAR(a[1], -2.4, 1e-14);
  EXPECT_THROW(feedback_control({1, 0}, 1.0), InvalidArgument);
}

TEST(Feedback, BruteForceMinimizer) {
  double best = 1e300, arg = 0;
  const double step = 1e-3;
  for (double a = -20; a <= 20; a += step) {
    const double v = a * 1.0 + running_cost({a, 0}, 3.0);
    if (v < best) {
      best = v;
      arg = a;
    }
  }
  EXPECT_NEAR(arg, -3.0, step);
}

TEST(LegendreGap, Examples) {
  EXPECT_NEAR(legendre_gap({1, 0}, {-3, 0}, 3), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(legendre_gap({1, 0}, {0, 0}, 3), 1.0);
}

TEST(LegendreGap, NonnegativeAndZeroAtFeedback) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(-3, 3), M(1.1, 6);
  for (int i = 0; i < 10000; ++i) {
    const Point p{U(rng), U(rng)}, a{U(rng), U(rng)};
    const double m = M(rng);
    EXPECT_GE(legendre_gap(p, a, m), -1e-12);
    EXPECT_NEAR(legendre_gap(p, feedback_control(p, m), m), 0.0, 1e-10 * (1 + std::pow(norm(p), m)));
  }
}

TEST(Interpolate, ReproducesBilinearFunctions) {
  auto g = build_grid(Domain::rectangle({-1, 1}, {0, 2}), {11, 21});
  const Field u = Field::from_function(g, [](Point x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[0] * x[1]; });
  for (Point x : {Point{0.13, 0.77}, Point{-0.99, 1.99}, Point{0.5, 1.0}}) {
    EXPECT_NEAR(interpolate(u, x), 1 + 2 * x[0] - x[1] + 0.5 * x[0] * x[1], 1e-12);
  }
}

TEST(MonteCarlo, ZeroDataIsZero) {
  auto g = build_grid(Domain::interval(-1, 1), {41});
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero);
  const ControlRun r = mc_value(p, fd_run(p, 0.5), {0.0, 0.0}, 0.5, 500, 1e-2, 1);
  EXPECT_LE(std::abs(r.mean), 3 * r.std_error + 1e-15);
  EXPECT_EQ(r.cost.size(), 500u);
}

TEST(MonteCarlo, MatchesFiniteDifferenceValue) {
  auto g = build_grid(Domain::interval(-1, 1), {201});
  ProblemSpec p = make_problem(g, 3.0, [](Point) { return 1.0; }, zero, zero);
  const Trajectory tr = fd_run(p, 1.0);
  const ControlRun r = mc_value(p, tr, {0.0, 0.0}, 1.0, 2000, 1e-3, 7);
  EXPECT_LE(std::abs(r.mean - interpolate(tr.final_field(), {0.0, 0.0})), 3 * r.std_error + 0.05);
  EXPECT_GT(r.exit_fraction, 0.0);
  EXPECT_LE(r.exit_fraction, 1.0);
}

TEST(MonteCarlo, Deterministic) {
  auto g = build_grid(Domain::interval(-1, 1), {41});
  ProblemSpec p = make_problem(g, 3.0, [](Point) { return 1.0; }, zero, zero);
  const Trajectory tr = fd_run(p, 0.5);
  const ControlRun a = mc_value(p, tr, {0.2, 0.0}, 0.5, 300, 1e-2, 99);
  const ControlRun b = mc_value(p, tr, {0.2, 0.0}, 0.5, 300, 1e-2, 99);
  const ControlRun c = mc_value(p, tr, {0.2, 0.0}, 0.5, 300, 1e-2, 100);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_NE(a.mean, c.mean);
  EXPECT_EQ(path_table(a).str(), path_table(b).str());
}

TEST(MonteCarlo, TwoDimensionalRunsAndExits) {
  auto g = build_grid(Domain::rectangle({-1, 1}, {-1, 1}), {21, 21});
  ProblemSpec p = make_problem(g, 3.0, [](Point) { return 1.0; }, zero, zero);
  const ControlRun r = mc_value(p, fd_run(p, 0.5), {0.5, -0.5}, 0.5, 300, 1e-2, 3);
  EXPECT_TRUE(std::isfinite(r.mean));
  EXPECT_GT(r.exit_fraction, 0.0);
  for (std::size_t i = 0; i < r.cost.size(); ++i) {
    EXPECT_TRUE(std::isfinite(r.cost[i]));
    EXPECT_LE(r.exit_time[i], 0.5 + 1e-12);
  }
}

TEST(MonteCarlo, FlagsCappedPaths) {
  auto g = build_grid(Domain::interval(-1, 1), {21});
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero);
  McOptions o;
  o.max_steps = 10;
  const ControlRun r = mc_value(p, fd_run(p, 1.0), {0.0, 0.0}, 1.0, 20, 1e-2, 1, o);
  EXPECT_EQ(r.capped_paths, 20u);
}

TEST(MonteCarlo, ValidatesInputs) {
  auto g = build_grid(Domain::interval(-1, 1), {21});
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero);
  const Trajectory tr = fd_run(p, 0.5);
  EXPECT_THROW(mc_value(p, tr, {1.0, 0.0}, 0.5, 10, 1e-2, 1), InvalidArgument);
  EXPECT_THROW(mc_value(p, tr, {0.0, 0.0}, 0.5, 0, 1e-2, 1), InvalidArgument);
  EXPECT_THROW(mc_value(p, tr, {0.0, 0.0}, 0.5, 10, 0.0, 1), InvalidArgument);
  EXPECT_THROW(mc_value(p, tr, {0.0, 0.0}, 1.0, 10, 1e-2, 1), InvalidArgument);
}

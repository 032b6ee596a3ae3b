#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vhj/evolve.hpp"
#include "vhj/scheme.hpp"
#include "vhj/stationary.hpp"

using namespace vhj;

namespace {

// Brute-force Godunov flux: scan |p|^m over the interval between the one-sided slopes.
double godunov_brute(double pm, double pp, double m) {
  const int n = 100000;
  const double lo = std::min(pm, pp), hi = std::max(pm, pp);
  double best = pm <= pp ? 1e300 : -1e300;
  for (int i = 0; i <= n; ++i) {
    const double v = std::pow(std::abs(lo + (hi - lo) * i / n), m);
    best = pm <= pp ? std::min(best, v) : std::max(best, v);
  }
  return best;
}

GridPtr line(std::size_t n) { return build_grid(Domain::interval(-1, 1), {n}); }

}  // namespace

TEST(Godunov, Examples) {
  EXPECT_EQ(godunov_hamiltonian_1d(0, 0, 3), 0.0);
  EXPECT_EQ(godunov_hamiltonian_1d(-1, 2, 3), 0.0);
  EXPECT_NEAR(godunov_hamiltonian_1d(2, -1, 3), godunov_brute(2, -1, 3), 1e-9);
  EXPECT_DOUBLE_EQ(godunov_hamiltonian_1d(2, -1, 3), 8.0);
}

TEST(Godunov, MatchesBruteForceAndUpwindForm) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int i = 0; i < 200; ++i) {
    const double pm = U(rng), pp = U(rng), m = 1.5 + 0.01 * i;
    const double v = godunov_hamiltonian_1d(pm, pp, m);
    EXPECT_NEAR(v, godunov_brute(pm, pp, m), 1e-3 * (1 + v));
    // Equivalent upwind form max(p⁻, −p⁺, 0)^m for a Hamiltonian minimal at 0.
    EXPECT_NEAR(v, std::pow(std::max({pm, -pp, 0.0}), m), 1e-12 * (1 + v));
  }
}

TEST(Godunov, MonotoneInArguments) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2, 2), E(0, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const double pm = U(rng), pp = U(rng), e = E(rng);
    EXPECT_LE(godunov_hamiltonian_1d(pm, pp, 3), godunov_hamiltonian_1d(pm + e, pp, 3) + 1e-12);
    EXPECT_GE(godunov_hamiltonian_1d(pm, pp, 3) + 1e-12, godunov_hamiltonian_1d(pm, pp + e, 3));
  }
}

TEST(GradNorm, Examples) {
  auto g = line(11);
  const Field c(g, 4.0);
  const Field x = Field::from_function(g, [](Point p) { return p[0]; });
  for (std::size_t k : g->interior()) {
    EXPECT_EQ(grad_norm_monotone(c, k, 3), 0.0);
    EXPECT_NEAR(grad_norm_monotone(x, k, 3), 1.0, 1e-12);
  }
  auto sq = build_grid(Domain::rectangle({0, 1}, {0, 1}), {9, 9});
  const Field lin = Field::from_function(sq, [](Point p) { return p[0] + 2 * p[1]; });
  for (std::size_t k : sq->interior()) EXPECT_NEAR(grad_norm_monotone(lin, k, 2), 1.0 + 4.0, 1e-10);
}

TEST(Laplacian, ExactOnQuadratics) {
  for (std::size_t n : {5u, 17u, 40u}) {
    auto g = line(n);
    const Field q = Field::from_function(g, [](Point p) { return p[0] * p[0]; });
    for (std::size_t k : g->interior()) EXPECT_NEAR(discrete_laplacian(q, k), 2.0, 1e-8);
    EXPECT_EQ(discrete_laplacian(Field(g, 3.0), g->interior()[0]), 0.0);
  }
  auto sq = build_grid(Domain::rectangle({-1, 1}, {0, 2}), {11, 13});
  const Field q = Field::from_function(sq, [](Point p) { return p[0] * p[0] + p[1] * p[1]; });
  for (std::size_t k : sq->interior()) EXPECT_NEAR(discrete_laplacian(q, k), 4.0, 1e-9);
}

TEST(Residual, Examples) {
  auto g = line(9);
  auto zero = [](Point) { return 0.0; };
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero, 0.0);
  for (std::size_t k : g->interior()) EXPECT_EQ(pde_residual(Field(g, 0.0), p, k), 0.0);
  p.lambda = 1.0;
  for (std::size_t k : g->interior()) EXPECT_DOUBLE_EQ(pde_residual(Field(g, 1.0), p, k), 1.0);
}

TEST(Residual, LinearInShiftWithSlopeMinusOne) {
  auto g = line(21);
  ProblemSpec p = make_problem(
      g, 3.0, [](Point x) { return std::cos(x[0]); }, [](Point) { return 0.0; }, [](Point) { return 0.0; }, 0.3);
  const Field u = Field::from_function(g, [](Point x) { return std::sin(3 * x[0]); });
  for (std::size_t k : g->interior()) {
    const double r0 = pde_residual(u, p, k);
    for (double s : {-2.0, 0.5, 7.0}) {
      ProblemSpec q = p;
      q.c_shift = s;
      EXPECT_NEAR(pde_residual(u, q, k), r0 - s, 1e-12);
    }
  }
}

TEST(Residual, SolverOutputMeetsTolerance) {
  auto g = line(41);
  ProblemSpec p = make_problem(
      g, 3.0, [](Point x) { return 1 + x[0]; }, [](Point) { return 0.0; }, [](Point) { return 0.0; }, 1.0);
  SteadyOptions opt;
  const auto r = solve_stationary(p, BoundaryKind::RelaxedDirichlet, opt);
  ASSERT_TRUE(r.converged);
  for (std::size_t k : g->interior()) EXPECT_LE(std::abs(pde_residual(r.solution, p, k)), opt.tol);
}

TEST(BoundaryUpdate, HugeDataMatchesStateConstraint) {
  auto g = line(31);
  ProblemSpec p = make_problem(
      g, 3.0, [](Point) { return 0.0; }, [](Point) { return 1e6; }, [](Point x) { return x[0] * x[0]; });
  for (std::size_t k : g->boundary()) {
    EXPECT_EQ(boundary_update(p.u0, p, k, BoundaryKind::RelaxedDirichlet),
              boundary_update(p.u0, p, k, BoundaryKind::StateConstraint));
  }
}

TEST(BoundaryUpdate, StateConstraintOnConstantIsLayerClosure) {
  auto g = line(21);
  auto zero = [](Point) { return 0.0; };
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero);
  const Field u(g, 2.5);
  const double h = g->spacing(0);
  for (std::size_t k : g->boundary()) {
    // κ h^α with κ = (m−1)^{−1/(m−1)}/α, α = 1/2 for m = 3.
    EXPECT_NEAR(boundary_update(u, p, k, BoundaryKind::StateConstraint), 2.5 + std::sqrt(0.5) * 2.0 * std::sqrt(h),
                1e-14);
  }
}

TEST(BoundaryUpdate, RelaxedReturnsDataBelowInteriorWhenSubquadratic) {
  auto g = line(21);
  ProblemSpec p = make_problem(
      g, 1.5, [](Point) { return 0.0; }, [](Point) { return -1.0; }, [](Point) { return 5.0; });
  for (std::size_t k : g->boundary()) EXPECT_EQ(boundary_update(p.u0, p, k, BoundaryKind::RelaxedDirichlet), -1.0);
  // m ≤ 2: no finite state-constraint closure.
  EXPECT_THROW(boundary_update(p.u0, p, 0, BoundaryKind::StateConstraint), InvalidArgument);
}

TEST(BoundaryUpdate, RelaxedNeverExceedsData) {
  auto g = line(21);
  ProblemSpec p = make_problem(
      g, 3.0, [](Point) { return 0.0; }, [](Point) { return 10.0; }, [](Point) { return 10.0; });
  const Field low(g, 0.0);
  for (std::size_t k : g->boundary()) {
    const double v = boundary_update(low, p, k, BoundaryKind::RelaxedDirichlet);
    EXPECT_LT(v, 10.0);
    EXPECT_EQ(v, state_constraint_value(low, 3.0, k));
  }
}

// Each explicit nodal update u_k − Δt·residual_k is nondecreasing in every
// stencil value under the CFL step.
TEST(Monotonicity, RandomConfigurations) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1, 1), E(1e-6, 1e-3);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool two_d = trial % 2 == 1;
    auto g = two_d ? build_grid(Domain::rectangle({0, 1}, {0, 1}), {5, 5}) : line(7);
    auto zero = [](Point) { return 0.0; };
    const double m = 1.5 + 2.5 * (trial % 5) / 4.0;
    ProblemSpec p = make_problem(g, m, zero, zero, zero, trial % 3 == 0 ? 1.0 : 0.0);
    Field u(g);
    for (std::size_t k = 0; k < g->size(); ++k) u[k] = U(rng);
    const double dt = cfl_timestep(u, p);
    const std::size_t k = g->interior()[static_cast<std::size_t>(trial) % g->interior().size()];
    const double base = u[k] - dt * pde_residual(u, p, k);
    std::vector<std::size_t> stencil{k - 1, k + 1, k};
    if (two_d) {
      stencil.push_back(k - g->stride(1));
      stencil.push_back(k + g->stride(1));
    }
    for (std::size_t nb : stencil) {
      Field v = u;
      const double e = E(rng);
      v[nb] += e;
      // The perturbation can raise the slope and hence the CFL bound; the step used is
      // the smaller of the two, as in evolve_ensemble.
      const double dt2 = std::min(dt, cfl_timestep(v, p));
      const double lo = u[k] - dt2 * pde_residual(u, p, k);
      const double hi = v[k] - dt2 * pde_residual(v, p, k);
      EXPECT_GE(hi, lo - 1e-12) << "trial " << trial << " neighbor " << nb;
    }
    (void)base;
  }
}

TEST(ProblemSpec, Validation) {
  auto g = line(9);
  auto zero = [](Point) { return 0.0; };
  ProblemSpec p = make_problem(g, 3.0, zero, zero, zero);
  EXPECT_NO_THROW(p.validate(true));
  p.m = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.m = 3.0;
  p.lambda = -0.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.lambda = 0.0;
  p.u0[0] = 1.0;
  EXPECT_THROW(p.validate(true), InvalidArgument);
  EXPECT_NO_THROW(p.validate(false));
}

TEST(LayerJump, ExponentAndSubquadraticLimit) {
  EXPECT_DOUBLE_EQ(holder_exponent(3.0), 0.5);
  EXPECT_TRUE(std::isinf(layer_jump(2.0, 0.1)));
  EXPECT_NEAR(layer_jump(3.0, 0.04) / layer_jump(3.0, 0.01), 2.0, 1e-12);
}

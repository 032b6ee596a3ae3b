#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vhj/analysis.hpp"

using namespace vhj;

namespace {

GridPtr line(std::size_t n) { return build_grid(Domain::interval(-1, 1), {n}); }

const auto zero = [](Point) { return 0.0; };

Field power_of_distance(const GridPtr& g, double beta, double scale = 1.0) {
  const Field d = distance_field(g);
  Field u(g);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = scale * std::pow(d[k], beta);
  return u;
}

ProblemSpec source(const GridPtr& g, double m, std::function<double(Point)> f) {
  return make_problem(g, m, f, zero, zero);
}

}  // namespace

TEST(HolderFit, SyntheticSquareRoot) {
  for (auto g : {line(801), build_grid(Domain::rectangle({-1, 1}, {-1, 1}), {129, 129})}) {
    const ExponentFit fit = holder_fit(power_of_distance(g, 0.5));
    ASSERT_TRUE(fit.defined);
    EXPECT_NEAR(fit.exponent, 0.5, 0.02);
    EXPECT_NEAR(fit.prefactor, 1.0, 0.1);
  }
}

TEST(HolderFit, ScaleInvariantExponent) {
  auto g = line(801);
  const ExponentFit a = holder_fit(power_of_distance(g, 0.4));
  for (double s : {-3.0, 0.01, 7.0}) {
    const ExponentFit b = holder_fit(power_of_distance(g, 0.4, s));
    EXPECT_NEAR(b.exponent, a.exponent, 1e-9);
    EXPECT_NEAR(b.prefactor, std::abs(s) * a.prefactor, 1e-6 * std::abs(s));
  }
}

TEST(HolderFit, ConstantIsDegenerate) {
  EXPECT_FALSE(holder_fit(Field(line(401), 2.0)).defined);
  EXPECT_FALSE(blowup_fit(Field(line(401), 2.0)).defined);
}

TEST(HolderFit, NeedsCollarResolution) {
  EXPECT_THROW(holder_fit(power_of_distance(line(21), 0.5)), InvalidArgument);
}

TEST(BlowupFit, SyntheticSquareRoot) {
  const ExponentFit fit = blowup_fit(power_of_distance(line(801), 0.5));
  ASSERT_TRUE(fit.defined);
  EXPECT_NEAR(fit.exponent, -0.5, 0.05);
}

TEST(HolderFit, ErgodicProfiles) {
  for (auto [m, lo, hi] : {std::tuple{3.0, 0.4, 0.6}, std::tuple{4.0, 0.57, 0.77}}) {
    const ErgodicPair pair = vanishing_discount(source(line(801), m, zero));
    const ExponentFit fit = holder_fit(pair.u_infinity);
    EXPECT_GE(fit.exponent, lo) << "m=" << m;
    EXPECT_LE(fit.exponent, hi) << "m=" << m;
  }
}

TEST(BlowupFit, DiscountedProfiles) {
  for (auto [m, lam, lo, hi] : {std::tuple{3.0, 1e-2, -0.6, -0.4}, std::tuple{2.5, 1e-2, -0.77, -0.57}}) {
    ProblemSpec p = source(line(3201), m, zero);
    p.lambda = lam;
    const ExponentFit fit = blowup_fit(solve_discounted_state_constraint(p));
    EXPECT_GE(fit.exponent, lo) << "m=" << m;
    EXPECT_LE(fit.exponent, hi) << "m=" << m;
  }
}

TEST(FitTable, Columns) {
  const ExponentFit fit = holder_fit(power_of_distance(line(401), 0.5));
  const csv::Table t = fit_table(fit);
  EXPECT_EQ(t.rows(), fit.samples);
  EXPECT_EQ(t.str().substr(0, t.str().find('\n')), "log_d,log_value");
  EXPECT_NE(to_key_values(fit, "holder").find("holder.exponent="), std::string::npos);
}

TEST(BoundaryLoss, SuperquadraticLosesLargeData) {
  auto g = line(101);
  ProblemSpec p = make_problem(g, 3.0, zero, [](Point) { return 10.0; }, [](Point) { return 10.0; }, 1.0);
  const Field u = solve_stationary(p, BoundaryKind::RelaxedDirichlet).solution;
  const LossReport r = boundary_loss(u, p.g, 2 * std::sqrt(g->min_spacing()));
  EXPECT_TRUE(r.all());
  EXPECT_GT(r.max_deficit, 1.0);
  EXPECT_EQ(r.losing_nodes.size(), g->boundary().size());
}

TEST(BoundaryLoss, SubquadraticKeepsData) {
  auto g = line(101);
  ProblemSpec p = make_problem(g, 1.5, zero, [](Point) { return 10.0; }, [](Point) { return 10.0; }, 1.0);
  const Field u = solve_stationary(p, BoundaryKind::RelaxedDirichlet).solution;
  EXPECT_FALSE(boundary_loss(u, p.g, 2 * std::sqrt(g->min_spacing())).any());
}

TEST(BoundaryLoss, ZeroData) {
  auto g = line(51);
  const LossReport r = boundary_loss(Field(g), Field(g), 1e-9);
  EXPECT_FALSE(r.any());
  EXPECT_EQ(r.max_deficit, 0.0);
  EXPECT_NE(to_key_values(r).find("loss.any=false"), std::string::npos);
}

TEST(Contraction, IdenticalInputs) {
  ProblemSpec p = source(line(41), 3.0, [](Point x) { return std::sin(x[0]); });
  const Trajectory a = evolve(p, 0.5, BoundaryKind::RelaxedDirichlet);
  const ContractionReport r = check_contraction(a, a, p, p, 0.0);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.worst_margin, 0.0);
}

TEST(Contraction, ShiftedInitialData) {
  auto g = line(41);
  for (double lam : {0.0, 1.0}) {
    auto u0 = [](Point x) { return 1 - x[0] * x[0]; };
    ProblemSpec p2 = make_problem(g, 3.0, zero, zero, u0, lam);
    ProblemSpec p1 = make_problem(g, 3.0, zero, zero, [&](Point x) { return u0(x) + (1 - x[0] * x[0]) * 0.5; }, lam);
    const Trajectory a = evolve(p1, 2.0, BoundaryKind::RelaxedDirichlet);
    const Trajectory b = evolve(p2, 2.0, BoundaryKind::RelaxedDirichlet);
    EXPECT_TRUE(check_contraction(a, b, p1, p2, 1e-12).ok()) << "lambda=" << lam;
  }
}

TEST(Contraction, RandomizedPairs) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-1, 1);
  auto g = line(41);
  const double slack = 2 * std::sqrt(g->min_spacing());
  for (int i = 0; i < 6; ++i) {
    const double lam = i % 2, a1 = U(rng), a2 = U(rng), g1 = U(rng), g2 = U(rng), b1 = U(rng), b2 = U(rng);
    ProblemSpec p1 = make_problem(g, 3.0, [&](Point x) { return a1 * std::cos(2 * x[0]); }, [&](Point) { return g1; },
                                  [&](Point x) { return g1 + b1 * (1 - x[0] * x[0]); }, lam);
    ProblemSpec p2 = make_problem(g, 3.0, [&](Point x) { return a2 * std::sin(3 * x[0]); }, [&](Point) { return g2; },
                                  [&](Point x) { return g2 + b2 * (1 - x[0] * x[0]); }, lam);
    const Trajectory r1 = evolve(p1, 1.0, BoundaryKind::RelaxedDirichlet);
    const Trajectory r2 = evolve(p2, 1.0, BoundaryKind::RelaxedDirichlet);
    EXPECT_TRUE(check_contraction(r1, r2, p1, p2, slack).ok());
    EXPECT_TRUE(check_contraction(r2, r1, p2, p1, slack).ok());
  }
}

TEST(Barrier, Examples) {
  EXPECT_NEAR(barrier_value(0.25, 2, 1, 0.5, 0.5), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(barrier_value(0.0, 2, 3, 0.5, 0.5), 6.0);
  EXPECT_THROW(barrier_value(0.1, 1, 1, 0.0, 0.5), InvalidArgument);
  EXPECT_THROW(barrier_value(0.1, 1, 1, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(barrier_value(-0.1, 1, 1, 1.0, 0.5), InvalidArgument);
}

TEST(Barrier, ConstantsSatisfyStructuralInequality) {
  const BarrierConstants b = barrier_constants(3.0, Domain::interval(-1, 1), 1.0);
  EXPECT_DOUBLE_EQ(b.alpha, 0.5);
  EXPECT_GT(std::pow(b.M, 2.0), 1.0 - b.alpha);
  EXPECT_GE(b.K, 2.0);
  EXPECT_THROW(barrier_constants(2.0, Domain::interval(-1, 1), 1.0), InvalidArgument);
}

TEST(Barrier, SandwichHolds) {
  auto g = line(401);
  for (double lam : {0.5, 0.1}) {
    ProblemSpec p = source(g, 3.0, [](Point x) { return std::cos(std::numbers::pi * x[0]); });
    p.lambda = lam;
    const Field u = solve_discounted_state_constraint(p);
    const BarrierConstants b = barrier_constants(3.0, g->domain(), p.f.max_abs());
    EXPECT_TRUE(barrier_sandwich(u, p, b, 2 * std::sqrt(g->min_spacing())).ok()) << "lambda=" << lam;
  }
}

TEST(Trichotomy, ZeroDataIsNegativeWithZeroLimit) {
  ProblemSpec p = source(line(101), 3.0, zero);
  const ErgodicPair pair = vanishing_discount(p);
  EvolveOptions o;
  o.sample_every = 0.1;
  const Trajectory tr = evolve(p, 4.0, BoundaryKind::RelaxedDirichlet, o);
  const TrichotomyReport r = classify_trichotomy(pair, tr, p);
  EXPECT_EQ(r.regime, Regime::NegativeC);
  EXPECT_LT(r.profile_distance, 1e-9);
  EXPECT_LT(tr.final_field().max_abs(), 1e-12);
}

TEST(Trichotomy, ShiftedRegimesFollowShiftedConstant) {
  auto g = line(101);
  auto f = [](Point x) { return std::cos(std::numbers::pi * x[0]); };
  const ErgodicPair base = vanishing_discount(source(g, 3.0, f));
  for (double target : {1.0, -1.0}) {
    const double s = base.c - target;
    ProblemSpec p = source(g, 3.0, [&](Point x) { return f(x) + s; });
    ErgodicPair pair = base;
    pair.c = base.c - s;
    EvolveOptions o;
    o.keep_fields = false;
    const Trajectory tr = evolve(p, 20.0, BoundaryKind::RelaxedDirichlet, o);
    const TrichotomyReport r = classify_trichotomy(pair, tr, p);
    EXPECT_EQ(r.regime, target > 0 ? Regime::PositiveC : Regime::NegativeC) << r.note;
    if (target > 0) {
      EXPECT_LT(r.tail_oscillation, 0.1);
    } else {
      EXPECT_LT(r.profile_distance, 5e-2);
    }
    EXPECT_NE(to_key_values(r).find(std::string("regime=") + to_string(r.regime)), std::string::npos);
  }
}

TEST(Trichotomy, ContradictingEvidenceIsInconclusive) {
  auto g = line(101);
  ProblemSpec p = source(g, 3.0, [](Point) { return -5.0; });
  ErgodicPair pair = vanishing_discount(p);
  pair.c = -pair.c;  // claims a negative constant for a drifting run
  EvolveOptions o;
  o.keep_fields = false;
  const Trajectory tr = evolve(p, 4.0, BoundaryKind::RelaxedDirichlet, o);
  EXPECT_EQ(classify_trichotomy(pair, tr, p).regime, Regime::Inconclusive);
}

TEST(Trichotomy, ShortTailRejected) {
  ProblemSpec p = source(line(21), 3.0, zero);
  EvolveOptions o;
  o.sample_every = 0.1;
  const Trajectory tr = evolve(p, 1.0, BoundaryKind::RelaxedDirichlet, o);
  EXPECT_THROW(classify_trichotomy(vanishing_discount(p), tr, p), InvalidArgument);
}

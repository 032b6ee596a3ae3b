#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/evolve.hpp"
#include "vhj/implicit.hpp"
#include "vhj/numerics.hpp"
#include "vhj/scheme.hpp"
#include "vhj/stationary.hpp"

namespace vhj {

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// Ergodic constant and profile obtained as λ → 0 limits.
struct ErgodicPair {
  double c = 0.0;
  /// u_{λ_last} − u_{λ_last}(x*); zero at x* exactly.
  Field u_infinity;
  std::vector<double> lambdas;
  std::vector<double> u_at_xstar;
  /// −λ_j u_{λ_j}(x*) for each rung.
  std::vector<double> c_series;
  std::size_t x_star = 0;
  bool converged = false;
  /// Set when the last increments of c_series stay above tol.
  bool non_cauchy = false;
  double tol = 0.0;
};

struct VanishingDiscountOptions {
  /// Strictly decreasing in (0, 1]; empty means 2^{-j}, j = 2..10.
  std::vector<double> lambdas;
  /// Node x*; npos selects the node nearest the domain center.
  std::size_t x_star = static_cast<std::size_t>(-1);
  double tol = 1e-2;
  /// Report 2c_J − c_{J−1} (first-order extrapolation in λ) instead of c_J.
  bool richardson = false;
};

inline std::vector<double> default_lambda_schedule() {
  std::vector<double> out;
  for (int j = 2; j <= 10; ++j) out.push_back(std::ldexp(1.0, -j));
  return out;
}

/// Discounted state-constraint solves along a decreasing λ ladder, each warm
/// started from the previous rung shifted by the current estimate of c/λ.
inline ErgodicPair vanishing_discount(const ProblemSpec& p, const VanishingDiscountOptions& opt = {}) {
  const std::vector<double> lambdas = opt.lambdas.empty() ? default_lambda_schedule() : opt.lambdas;
  if (lambdas.size() < 3) throw InvalidArgument("lambda schedule needs at least 3 values");
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (!(lambdas[j] > 0.0) || lambdas[j] > 1.0) throw InvalidArgument("lambda schedule must lie in (0, 1]");
    if (j > 0 && !(lambdas[j] < lambdas[j - 1])) throw InvalidArgument("lambda schedule must be strictly decreasing");
  }
  if (!(opt.tol > 0.0)) throw InvalidArgument("tol must be > 0");
  const GridPtr& grid = p.grid();
  const std::size_t xs = opt.x_star == static_cast<std::size_t>(-1) ? grid->center_node() : opt.x_star;
  if (xs >= grid->size() || grid->is_boundary(xs)) throw InvalidArgument("x* must be an interior node");
  if (grid->domain().distance(grid->point(xs)) < grid->domain().delta0() - 1e-12) {
    throw InvalidArgument("x* must satisfy d(x*) >= delta0");
  }

  ErgodicPair out;
  out.x_star = xs;
  out.tol = opt.tol;
  out.lambdas = lambdas;
  ProblemSpec q = p;
  Field u = p.u0;
  double prev_lambda = 0.0;
  for (double lam : lambdas) {
    q.lambda = lam;
    // u_λ ≈ −c/λ + v, so moving to the next rung shifts by c(1/λ_prev − 1/λ).
    if (prev_lambda > 0.0) u += out.c_series.back() * (1.0 / prev_lambda - 1.0 / lam);
    u = solve_discounted_state_constraint(q, &u);
    out.u_at_xstar.push_back(u[xs]);
    out.c_series.push_back(-lam * u[xs]);
    prev_lambda = lam;
  }
  const auto& cs = out.c_series;
  const std::size_t J = cs.size() - 1;
  out.converged = std::abs(cs[J] - cs[J - 1]) < opt.tol && std::abs(cs[J - 1] - cs[J - 2]) < opt.tol;
  out.non_cauchy = !out.converged;
  out.c = opt.richardson ? 2.0 * cs[J] - cs[J - 1] : cs[J];
  out.u_infinity = u;
  const double anchor = u[xs];
  for (std::size_t k = 0; k < u.size(); ++k) out.u_infinity[k] = u[k] - anchor;
  return out;
}

/// c ≈ −(least-squares slope of t ↦ u(x*, t)) over samples with t ∈ [t0, t1].
inline double slope_estimate_c(const Trajectory& traj, double t0, double t1) {
  std::vector<double> ts, vs;
  for (std::size_t s = 0; s < traj.samples(); ++s) {
    if (traj.times[s] >= t0 - 1e-12 && traj.times[s] <= t1 + 1e-12) {
      ts.push_back(traj.times[s]);
      vs.push_back(traj.probe[s]);
    }
  }
  if (ts.size() < 10) {
    throw InsufficientSamples("slope window holds " + std::to_string(ts.size()) + " samples, need >= 10");
  }
  return -least_squares_line(ts, vs).slope;
}

struct CharacterizationMargins {
  /// Allowed excess of −Δu + H(u) − f − c over interior nodes.
  double subsolution = 0.1;
  /// Level offset of the dynamic probe: source f + (c − probe).
  double probe = 0.2;
  double probe_horizon = 40.0;
};

struct CharacterizationReport {
  double max_subsolution_excess = 0.0;
  bool subsolution_ok = false;
  /// −slope of the probe run's center value; ≈ probe margin when no subsolution exists below c.
  double probe_drift = 0.0;
  bool probe_settled = false;
  bool drift_detected = false;
  bool ok() const { return subsolution_ok && drift_detected; }
};

/// (a) u_∞ is a discrete subsolution at level c within the margin;
/// (b) at level c − probe the state-constraint march does not settle and drifts
/// at rate ≈ probe, so no steady state (hence no subsolution) exists there.
inline CharacterizationReport check_characterization(const ErgodicPair& pair, const ProblemSpec& p,
                                                     const CharacterizationMargins& margins = {}) {
  CharacterizationReport rep;
  ProblemSpec q = p;
  q.lambda = 0.0;
  q.c_shift = pair.c;
  const Grid& g = *p.grid();
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k : g.interior()) excess = std::max(excess, pde_residual(pair.u_infinity, q, k));
  rep.max_subsolution_excess = excess;
  rep.subsolution_ok = excess <= margins.subsolution;

  q.c_shift = pair.c - margins.probe;
  q.u0 = pair.u_infinity;
  SteadyOptions so;
  so.t_max = margins.probe_horizon;
  const SteadyResult r = solve_stationary(q, BoundaryKind::StateConstraint, so);
  rep.probe_settled = r.converged;
  rep.probe_drift = r.drift;
  rep.drift_detected = !r.converged && std::abs(r.drift - margins.probe) <= 0.5 * margins.probe;
  return rep;
}

/// λ ladder: lambda, u_lambda_xstar, c_lambda.
inline csv::Table ladder_table(const ErgodicPair& pair) {
  csv::Table t({"lambda", "u_lambda_xstar", "c_lambda"});
  for (std::size_t j = 0; j < pair.lambdas.size(); ++j) {
    t.add({csv::num(pair.lambdas[j]), csv::num(pair.u_at_xstar[j]), csv::num(pair.c_series[j])});
  }
  return t;
}

inline csv::Table field_table(const Field& u, const std::string& name = "value") {
  const Grid& g = u.grid();
  std::vector<std::string> header = csv::coordinate_header(g);
  header.push_back(name);
  csv::Table t(header);
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::vector<std::string> row;
    csv::append_coordinates(row, g, k);
    row.push_back(csv::num(u[k]));
    t.add(std::move(row));
  }
  return t;
}

}  // namespace vhj

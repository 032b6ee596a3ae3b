#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/scheme.hpp"
#include "vhj/stationary.hpp"

namespace vhj {

class NoBracket : public Error {
 public:
  using Error::Error;
};

/// ∫_{−∞}^{∞} ds/(1+|s|^m) by adaptive Gauss–Kronrod. The tail [1, ∞) is
/// mapped to [0, 1] by s = u^{−1/(m−1)}, which turns it into
/// (1/(m−1)) ∫_0^1 du/(1 + u^{m/(m−1)}) and removes the slow s^{−m} decay.
inline double integral_I(double m) {
  if (!(m > 1.0)) throw InvalidArgument("integral_I diverges for m <= 1");
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double q = m / (m - 1.0);
  const double core = GK::integrate([m](double s) { return 1.0 / (1.0 + std::pow(s, m)); }, 0.0, 1.0, 15, 1e-14);
  const double tail = GK::integrate([q](double u) { return 1.0 / (1.0 + std::pow(u, q)); }, 0.0, 1.0, 15, 1e-14);
  return 2.0 * (core + tail / (m - 1.0));
}

/// 2π/(m sin(π/m)).
inline double integral_I_closed_form(double m) {
  if (!(m > 1.0)) throw InvalidArgument("integral_I diverges for m <= 1");
  return 2.0 * std::numbers::pi / (m * std::sin(std::numbers::pi / m));
}

/// (I(m)/R)^{1/(m−1)}: no solution of −η″ + |η′|^m = −C^m on (−R,R) above it.
inline double critical_C(double R, double m) {
  if (!(R > 0.0)) throw InvalidArgument("R must be > 0");
  return std::pow(integral_I(m) / R, 1.0 / (m - 1.0));
}

/// (I(m)/(2R))^{1/(m−1)}: the first integral taken over the whole interval,
/// which is where solvability actually ends.
inline double sharp_critical_C(double R, double m) {
  if (!(R > 0.0)) throw InvalidArgument("R must be > 0");
  return std::pow(integral_I(m) / (2.0 * R), 1.0 / (m - 1.0));
}

/// Ergodic constant of −w″ + |w′|^m = s + c on (−R,R) with state constraints:
/// c = −s − (I(m)/(2R))^{m/(m−1)}.
inline double exact_ergodic_constant_1d(double s, double R, double m) {
  return -s - std::pow(integral_I(m) / (2.0 * R), m / (m - 1.0));
}

struct ShootingResult {
  bool exists = false;
  double C = 0.0;
  /// η′(0) maximizing the covered interval.
  double eta_prime_0 = 0.0;
  /// Distances from 0 reachable to the right and left before η′ blows up.
  double reach_right = 0.0;
  double reach_left = 0.0;
  /// η′ sampled at interior points of (−R,R) when exists.
  std::vector<double> x;
  std::vector<double> eta_prime;
};

namespace detail {

/// F(s) = ∫_0^s dσ/(1+|σ|^m); odd in s, F(±∞) = ±I/2.
inline double first_integral(double s, double m) {
  if (s == 0.0) return 0.0;
  if (std::isinf(s)) return std::copysign(0.5 * integral_I(m), s);
  const double a = std::abs(s);
  if (a < 1e-3) {
    // Σ (−1)^k a^{km+1}/(km+1); a^m < 1e-3 so a few terms reach round-off.
    double v = 0.0, term = a, sign = 1.0;
    for (int k = 0; k < 12; ++k, term *= std::pow(a, m), sign = -sign) v += sign * term / (k * m + 1.0);
    return std::copysign(v, s);
  }
  auto f = [m](double t) { return 1.0 / (1.0 + std::pow(std::abs(t), m)); };
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, a, 15, 1e-12);
  return std::copysign(v, s);
}

}  // namespace detail

/// Shooting on η′(0) for −η″ + |η′|^m = −C^m on (−R,R). With η′ = Cσ the ODE
/// integrates to x = C^{1−m} (F(σ(x)) − F(σ(0))), so η′ stays finite on
/// (−R,R) iff both reaches (I/2 ∓ F(σ0))/C^{m−1} are at least R.
inline ShootingResult solve_ode_shooting(double C, double R, double m) {
  if (!(C > 0.0)) throw InvalidArgument("C must be > 0");
  if (!(R > 0.0)) throw InvalidArgument("R must be > 0");
  if (!(m > 1.0)) throw InvalidArgument("m must be > 1");
  const double half = 0.5 * integral_I(m);
  const double scale = std::pow(C, m - 1.0);
  auto margin = [&](double sigma0) {
    const double F0 = detail::first_integral(sigma0, m);
    return std::min(half - F0, half + F0) / scale - R;
  };

  // Scan η′(0) ∈ [−10C, 10C] at 10³ points, then refine by golden section.
  const int n = 1000;
  double best_s = -10.0, best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double s = -10.0 + 20.0 * i / (n - 1);
    const double v = margin(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  double a = best_s - 20.0 / (n - 1), b = best_s + 20.0 / (n - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = margin(x1), f2 = margin(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = margin(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = margin(x2);
    }
  }
  const double s_ref = 0.5 * (a + b);
  if (margin(s_ref) > best) best_s = s_ref;

  ShootingResult out;
  out.C = C;
  out.eta_prime_0 = C * best_s;
  const double F0 = detail::first_integral(best_s, m);
  out.reach_right = (half - F0) / scale;
  out.reach_left = (half + F0) / scale;
  out.exists = std::min(out.reach_right, out.reach_left) >= R * (1.0 - 1e-12);
  if (!out.exists) return out;

  // η′(x) = C·F^{-1}(F0 + C^{m−1}x), inverted by bisection.
  const int samples = 101;
  for (int i = 0; i < samples; ++i) {
    const double x = -R + 2.0 * R * (i + 0.5) / samples;
    const double target = F0 + scale * x;
    double lo = -1.0, hi = 1.0;
    while (detail::first_integral(lo, m) > target && lo > -1e12) lo *= 2.0;
    while (detail::first_integral(hi, m) < target && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::first_integral(mid, m) < target ? lo : hi) = mid;
    }
    out.x.push_back(x);
    out.eta_prime.push_back(C * 0.5 * (lo + hi));
  }
  return out;
}

struct EpsilonStarResult {
  /// f ≥ 0: every ε is solvable.
  bool infinite = false;
  double value = std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  int solves = 0;
};

struct EpsilonStarOptions {
  double eps_max = 1e3;
  SteadyOptions steady;
  /// Boundary data of the stationary problem.
  double g = 0.0;
};

/// Whether −Δw + |Dw|^m = ε f with relaxed Dirichlet data reaches a steady state.
inline bool fd_solvable(const Field& f, double m, double eps, const EpsilonStarOptions& opt) {
  ProblemSpec p;
  p.m = m;
  p.f = f;
  p.f *= eps;
  p.g = Field(f.grid_ptr(), opt.g);
  p.u0 = Field(f.grid_ptr(), opt.g);
  return solve_stationary(p, BoundaryKind::RelaxedDirichlet, opt.steady).converged;
}

/// Bisection on ε of the FD solvability predicate for the source ε f on (−R,R).
/// For f ≤ 0 the predicate is monotone (ε f decreases in ε); for sign-changing
/// f the bracket is found by doubling and bisection is a heuristic.
inline EpsilonStarResult epsilon_star(const Field& f, double R, double m, double tol,
                                      const EpsilonStarOptions& opt = {}) {
  const Grid& g = f.grid();
  if (g.dimension() != 1 || std::abs(g.domain().axis(0).lo + R) > 1e-12 * R ||
      std::abs(g.domain().axis(0).hi - R) > 1e-12 * R) {
    throw InvalidArgument("epsilon_star expects f on the interval (-R, R)");
  }
  if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
  EpsilonStarResult out;
  if (f.inf() >= 0.0) {
    out.infinite = true;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  for (;;) {
    ++out.solves;
    if (!fd_solvable(f, m, hi, opt)) break;
    lo = hi;
    if (hi >= opt.eps_max) throw NoBracket("solvable up to eps_max = " + csv::num(opt.eps_max));
    hi = std::min(2.0 * hi, opt.eps_max);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    ++out.solves;
    (fd_solvable(f, m, mid, opt) ? lo : hi) = mid;
  }
  out.lo = lo;
  out.hi = hi;
  out.value = 0.5 * (lo + hi);
  return out;
}

struct ThresholdRow {
  double C = 0.0;
  bool oracle_exists = false;
  bool fd_converged = false;
  SteadyStatus fd_status = SteadyStatus::TimedOut;
  double fd_drift = 0.0;
};

/// FD stationary solve of −η″ + |η′|^m = −C^m, η = 0 on ±R (relaxed), beside the shooting oracle.
inline ThresholdRow threshold_point(double C, double R, double m, std::size_t nodes, const SteadyOptions& so = {}) {
  ThresholdRow row;
  row.C = C;
  row.oracle_exists = solve_ode_shooting(C, R, m).exists;
  auto grid = build_grid(Domain::interval(-R, R), {nodes});
  ProblemSpec p;
  p.m = m;
  p.f = Field(grid, -std::pow(C, m));
  p.g = Field(grid, 0.0);
  p.u0 = Field(grid, 0.0);
  const SteadyResult r = solve_stationary(p, BoundaryKind::RelaxedDirichlet, so);
  row.fd_converged = r.converged;
  row.fd_status = r.status;
  row.fd_drift = r.drift;
  return row;
}

inline csv::Table threshold_table(const std::vector<ThresholdRow>& rows) {
  csv::Table t({"C", "oracle_exists", "fd_outcome", "fd_drift"});
  for (const auto& r : rows) {
    t.add({csv::num(r.C), r.oracle_exists ? "true" : "false", to_string(r.fd_status), csv::num(r.fd_drift)});
  }
  return t;
}

}  // namespace vhj

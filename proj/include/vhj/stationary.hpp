#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/implicit.hpp"
#include "vhj/numerics.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

enum class SteadyStatus { Converged, TimedOut, Diverged };

inline const char* to_string(SteadyStatus s) {
  switch (s) {
    case SteadyStatus::Converged: return "converged";
    case SteadyStatus::TimedOut: return "timed_out";
    case SteadyStatus::Diverged: return "diverged";
  }
  return "unknown";
}

/// Raised by solvers whose contract is a Field when no steady state is found.
class SolverFailure : public Error {
 public:
  SolverFailure(SteadyStatus status, const std::string& what) : Error(what), status_(status) {}
  SteadyStatus status() const { return status_; }

 private:
  SteadyStatus status_;
};

struct SteadyOptions {
  /// Converged once ‖u^{n+1} − u^n‖∞/Δt < tol for `sustain` consecutive steps.
  double tol = 1e-6;
  double t_max = 200.0;
  int sustain = 50;
  double dt_initial = 1e-2;
  double dt_max = 1.0;
  double growth = 1.5;
  double divergence_cap = 1e6;
  /// Probe node; npos selects the node nearest the domain center.
  std::size_t probe_node = static_cast<std::size_t>(-1);
};

struct SteadyResult {
  SteadyStatus status = SteadyStatus::TimedOut;
  bool converged = false;
  Field solution;
  /// Max interior |pde_residual| of the final field.
  double max_residual = 0.0;
  /// Boundary values of the final field, in grid().boundary() order.
  std::vector<double> trace;
  std::size_t iterations = 0;
  double pseudo_time = 0.0;
  /// −slope of the probe over the second half of the run: ≈ c when the run drifts.
  double drift = 0.0;
  std::vector<double> probe_times;
  std::vector<double> probe_values;
};

namespace detail {

inline double tail_drift(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() < 3) return 0.0;
  const double half = 0.5 * t.back();
  std::size_t first = 0;
  while (first < t.size() && t[first] < half) ++first;
  if (t.size() - first < 2) first = t.size() - 2;
  const std::span<const double> ts(t.data() + first, t.size() - first);
  const std::span<const double> vs(v.data() + first, v.size() - first);
  return -least_squares_line(ts, vs).slope;
}

inline void finish(SteadyResult& r, const MonotoneSystem& sys) {
  r.converged = r.status == SteadyStatus::Converged;
  r.trace.clear();
  for (std::size_t k : r.solution.grid().boundary()) r.trace.push_back(r.solution[k]);
  r.max_residual = r.solution.all_finite() ? sys.max_interior_residual(r.solution)
                                           : std::numeric_limits<double>::infinity();
  r.drift = tail_drift(r.probe_times, r.probe_values);
}

}  // namespace detail

/// Steady state of u_t − Δu + |Du|^m + λu = f + c_shift by backward-Euler
/// pseudo-time marching from u0. Each step is one monotone nonlinear solve, so
/// the march keeps the comparison structure of the explicit scheme while
/// allowing Δt up to dt_max.
inline SteadyResult solve_stationary(const ProblemSpec& p, BoundaryKind kind, const SteadyOptions& opt = {}) {
  p.validate(false);
  if (!(opt.tol > 0.0)) throw InvalidArgument("tol must be > 0");
  if (!(opt.t_max > 0.0)) throw InvalidArgument("T_max must be > 0");
  detail::MonotoneSystem sys(p, kind);
  const Grid& grid = *p.grid();
  const std::size_t probe = opt.probe_node == static_cast<std::size_t>(-1) ? grid.center_node() : opt.probe_node;

  SteadyResult r;
  r.solution = p.u0;
  Field& u = r.solution;
  apply_boundary(u, p, kind);
  Field prev = u;
  r.probe_times.push_back(0.0);
  r.probe_values.push_back(u[probe]);

  double dt = opt.dt_initial, t = 0.0;
  int quiet = 0;
  while (t < opt.t_max) {
    dt = std::min(dt, opt.t_max - t);
    prev = u;
    const auto rep = sys.solve(u, &prev, 1.0 / dt);
    if (!rep.converged) {
      u = prev;
      dt *= 0.25;
      if (dt < 1e-12) {
        r.status = SteadyStatus::Diverged;
        break;
      }
      continue;
    }
    t += dt;
    ++r.iterations;
    r.probe_times.push_back(t);
    r.probe_values.push_back(u[probe]);
    if (!(u.max_abs() <= opt.divergence_cap)) {
      r.status = SteadyStatus::Diverged;
      break;
    }
    double inc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) inc = std::max(inc, std::abs(u[k] - prev[k]));
    quiet = inc / dt < opt.tol ? quiet + 1 : 0;
    if (quiet >= opt.sustain) {
      r.status = SteadyStatus::Converged;
      break;
    }
    dt = std::min(dt * opt.growth, opt.dt_max);
  }
  r.pseudo_time = t;
  detail::finish(r, sys);
  return r;
}

/// u_λ of the discounted state-constraint problem −Δu + |Du|^m + λu = f + c_shift.
///
/// Solved by Newton on the steady system: the discrete operator is a convex
/// M-function, so after the first iterate the sequence decreases monotonically
/// to the unique root. Falls back to pseudo-time marching if Newton stalls.
inline Field solve_discounted_state_constraint(const ProblemSpec& p, const Field* warm_start = nullptr,
                                               const SteadyOptions& opt = {}) {
  p.validate(false);
  if (!(p.lambda > 0.0) || p.lambda > 1.0) throw InvalidArgument("discount lambda must lie in (0, 1]");
  detail::MonotoneSystem sys(p, BoundaryKind::StateConstraint);
  Field u = warm_start ? *warm_start : p.u0;
  if (u.grid_ptr() != p.grid()) throw InvalidArgument("warm start must live on the problem grid");
  detail::NewtonOptions nopt;
  nopt.max_iterations = 200;
  const auto rep = sys.solve(u, nullptr, 0.0, nopt);
  if (rep.converged && u.all_finite()) return u;

  ProblemSpec q = p;
  q.u0 = warm_start ? *warm_start : p.u0;
  const SteadyResult r = solve_stationary(q, BoundaryKind::StateConstraint, opt);
  if (!r.converged) throw SolverFailure(r.status, std::string("discounted state-constraint solve ") + to_string(r.status));
  return r.solution;
}

/// Node coordinates, value, and residual (PDE residual inside, boundary-closure
/// residual on ∂Ω).
inline csv::Table steady_table(const SteadyResult& r, const ProblemSpec& p, BoundaryKind kind) {
  const Grid& g = r.solution.grid();
  std::vector<std::string> header = csv::coordinate_header(g);
  header.push_back("value");
  header.push_back("residual");
  csv::Table table(header);
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::vector<std::string> row;
    csv::append_coordinates(row, g, k);
    row.push_back(csv::num(r.solution[k]));
    const double res = g.is_boundary(k) ? r.solution[k] - boundary_update(r.solution, p, k, kind)
                                        : pde_residual(r.solution, p, k);
    row.push_back(csv::num(res));
    table.add(std::move(row));
  }
  return table;
}

/// One-line record: {"status":...,"converged":...,"iterations":...,"max_residual":...}
inline std::string steady_summary(const SteadyResult& r) {
  return std::string("{\"status\":\"") + to_string(r.status) + "\",\"converged\":" + (r.converged ? "true" : "false") +
         ",\"iterations\":" + csv::num(r.iterations) + ",\"max_residual\":" + csv::num(r.max_residual) +
         ",\"pseudo_time\":" + csv::num(r.pseudo_time) + ",\"drift\":" + csv::num(r.drift) + "}";
}

}  // namespace vhj

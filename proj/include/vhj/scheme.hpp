#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "vhj/domain.hpp"
#include "vhj/numerics.hpp"

namespace vhj {

enum class BoundaryKind { RelaxedDirichlet, StateConstraint };

inline const char* to_string(BoundaryKind k) {
  return k == BoundaryKind::RelaxedDirichlet ? "relaxed_dirichlet" : "state_constraint";
}

/// One instance of u_t − Δu + |Du|^m + λu = f + c_shift with boundary data g.
///
/// `g` is stored as a full Field; only its boundary entries are read.
struct ProblemSpec {
  double m = 2.0;
  Field f;
  Field g;
  Field u0;
  double lambda = 0.0;
  double c_shift = 0.0;

  const GridPtr& grid() const { return f.grid_ptr(); }

  /// Throws InvalidArgument on m ≤ 1, λ < 0, mismatched grids, non-finite
  /// data, or (for evolution) u0 ≠ g on a boundary node.
  void validate(bool for_evolution = false, double compat_tol = 1e-9) const {
    if (!(m > 1.0) || !std::isfinite(m)) throw InvalidArgument("exponent m must be > 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("discount lambda must be >= 0");
    if (!std::isfinite(c_shift)) throw InvalidArgument("c_shift must be finite");
    if (!f.grid_ptr() || g.grid_ptr() != f.grid_ptr() || u0.grid_ptr() != f.grid_ptr()) {
      throw InvalidArgument("f, g and u0 must live on the same grid");
    }
    if (!f.all_finite() || !g.all_finite() || !u0.all_finite()) throw InvalidArgument("problem data must be finite");
    if (for_evolution) {
      for (std::size_t k : grid()->boundary()) {
        if (std::abs(u0[k] - g[k]) > compat_tol * (1.0 + std::abs(g[k]))) {
          throw InvalidArgument("incompatible data: u0 != g at boundary node " + std::to_string(k));
        }
      }
    }
  }
};

/// Builds a ProblemSpec with f, g, u0 sampled from callables.
template <class F, class G, class U0>
ProblemSpec make_problem(const GridPtr& grid, double m, F&& f, G&& g, U0&& u0, double lambda = 0.0) {
  ProblemSpec p;
  p.m = m;
  p.f = Field::from_function(grid, f);
  p.g = Field::from_function(grid, g);
  p.u0 = Field::from_function(grid, u0);
  p.lambda = lambda;
  return p;
}

/// Godunov flux for |p|^m: min of |p|^m over [p⁻, p⁺] when p⁻ ≤ p⁺, max
/// over [p⁺, p⁻] otherwise.
inline double godunov_hamiltonian_1d(double p_minus, double p_plus, double m) {
  const double a = std::abs(p_minus), b = std::abs(p_plus);
  if (p_minus <= p_plus) {
    if (p_minus <= 0.0 && p_plus >= 0.0) return 0.0;
    return std::pow(std::min(a, b), m);
  }
  return std::pow(std::max(a, b), m);
}

/// Exponent of the boundary-layer profile, α = (m−2)/(m−1).
inline double holder_exponent(double m) { return (m - 2.0) / (m - 1.0); }

/// Jump u_b − u_in across the first cell of the state-constraint layer.
///
/// Near ∂Ω the solution behaves like u_b − κ d^α with |Du| = ((m−1)d)^{−1/(m−1)},
/// κ = (m−1)^{−1/(m−1)}/α. For m ≤ 2 the layer is unbounded and the value is +∞.
inline double layer_jump(double m, double h) {
  if (m <= 2.0) return std::numeric_limits<double>::infinity();
  const double alpha = holder_exponent(m);
  const double kappa = std::pow(m - 1.0, -1.0 / (m - 1.0)) / alpha;
  return kappa * std::pow(h, alpha);
}

namespace detail {

/// Upwind slope max(D⁻u, −D⁺u, 0) along one axis at an interior node.
inline double upwind_slope(std::span<const double> u, std::size_t k, std::size_t stride, double inv_h) {
  const double dm = (u[k] - u[k - stride]) * inv_h;
  const double mp = (u[k] - u[k + stride]) * inv_h;
  return std::max({dm, mp, 0.0});
}

}  // namespace detail

/// ( Σ_axes max(D⁻u, −D⁺u, 0)² )^{m/2} at an interior node.
inline double grad_norm_monotone(const Field& u, std::size_t node, double m) {
  const Grid& g = u.grid();
  double s2 = 0.0;
  for (int a = 0; a < g.dimension(); ++a) {
    const double s = detail::upwind_slope(u.values(), node, g.stride(a), 1.0 / g.spacing(a));
    s2 += s * s;
  }
  return s2 > 0.0 ? std::pow(s2, 0.5 * m) : 0.0;
}

/// Sum over axes of the centered second difference.
inline double discrete_laplacian(const Field& u, std::size_t node) {
  const Grid& g = u.grid();
  double lap = 0.0;
  for (int a = 0; a < g.dimension(); ++a) {
    const std::size_t s = g.stride(a);
    const double h = g.spacing(a);
    lap += (u[node - s] - 2.0 * u[node] + u[node + s]) / (h * h);
  }
  return lap;
}

/// −Δ_h u + H_h(u) + λu − f − c_shift at an interior node.
inline double pde_residual(const Field& u, const ProblemSpec& p, std::size_t node) {
  return -discrete_laplacian(u, node) + grad_norm_monotone(u, node, p.m) + p.lambda * u[node] - p.f[node] -
         p.c_shift;
}

/// Value the state-constraint closure assigns to boundary node `node`.
inline double state_constraint_value(const Field& u, double m, std::size_t node) {
  const Grid& g = u.grid();
  return u[g.inward_neighbor(node)] + layer_jump(m, g.inward_spacing(node));
}

/// New value of a boundary node.
///
/// StateConstraint: the layer closure u_in + κh^α. RelaxedDirichlet:
/// min(g, closure), so the trace never exceeds g and detaches from it when the
/// closure value drops below (loss of the boundary condition, m > 2 only).
inline double boundary_update(const Field& u, const ProblemSpec& p, std::size_t node, BoundaryKind kind) {
  const double sc = state_constraint_value(u, p.m, node);
  if (kind == BoundaryKind::StateConstraint) {
    if (!std::isfinite(sc)) throw InvalidArgument("state constraint requires m > 2");
    return sc;
  }
  return std::min(p.g[node], sc);
}

/// Applies boundary_update to every boundary node of u, in place.
inline void apply_boundary(Field& u, const ProblemSpec& p, BoundaryKind kind) {
  for (std::size_t k : u.grid().boundary()) u[k] = boundary_update(u, p, k, kind);
}

}  // namespace vhj

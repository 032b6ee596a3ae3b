#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/numerics.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

/// Raised when |u|∞ exceeds the divergence cap or the CFL step underflows.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, double max_abs)
      : Error("solution diverged at t = " + std::to_string(time) + " (|u|inf = " + std::to_string(max_abs) + ")"),
        time_(time),
        max_abs_(max_abs) {}
  double time() const { return time_; }
  double max_abs() const { return max_abs_; }

 private:
  double time_;
  double max_abs_;
};

/// Sampled output of a parabolic run.
struct Trajectory {
  std::vector<double> times;
  std::vector<Field> fields;
  /// u(x*, t) at each sample time.
  std::vector<double> probe;
  /// max-norm increment rate ‖u^{n+1} − u^n‖∞/Δt of the step ending at each sample (0 at t = 0).
  std::vector<double> increment_rate;
  std::size_t probe_node = 0;
  std::size_t steps = 0;

  std::size_t samples() const { return times.size(); }
  const Field& final_field() const { return fields.back(); }
};

struct EvolveOptions {
  /// Sample spacing; 0 means T/200.
  double sample_every = 0.0;
  double divergence_cap = 1e6;
  double safety = 0.5;
  /// Probe node; npos selects the node nearest the domain center.
  std::size_t probe_node = static_cast<std::size_t>(-1);
  /// When false only the probe series and the final field are kept.
  bool keep_fields = true;
};

namespace detail {

/// Stencil data for the explicit update, precomputed once per grid.
struct ExplicitKernel {
  explicit ExplicitKernel(const ProblemSpec& p)
      : grid(p.grid().get()), power(p.m), dim(grid->dimension()) {
    for (int a = 0; a < dim; ++a) {
      stride[a] = grid->stride(a);
      inv_h[a] = 1.0 / grid->spacing(a);
      inv_h2[a] = inv_h[a] * inv_h[a];
    }
  }

  /// Fills res[k] = pde_residual at interior nodes and returns the largest upwind slope.
  double residual(std::span<const double> u, const ProblemSpec& p, std::span<double> res) const {
    double smax = 0.0;
    const auto f = p.f.values();
    for (std::size_t k : grid->interior()) {
      double lap = 0.0, s2 = 0.0, s1 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const std::size_t st = stride[a];
        const double um = u[k - st], up = u[k + st], uk = u[k];
        lap += (um - 2.0 * uk + up) * inv_h2[a];
        const double s = std::max({(uk - um) * inv_h[a], (uk - up) * inv_h[a], 0.0});
        s1 = s;
        s2 += s * s;
      }
      const double s = dim == 1 ? s1 : std::sqrt(s2);
      smax = std::max(smax, s);
      res[k] = -lap + power(s) + p.lambda * u[k] - f[k] - p.c_shift;
    }
    return smax;
  }

  double timestep(double smax, const ProblemSpec& p, double safety) const {
    const double h = grid->min_spacing();
    const double lh = smax > 0.0 ? power.derivative(smax) : 0.0;
    return safety / (2.0 * dim / (h * h) + lh / h + p.lambda);
  }

  const Grid* grid;
  PowerLaw power;
  int dim;
  std::size_t stride[2]{1, 1};
  double inv_h[2]{1.0, 1.0};
  double inv_h2[2]{1.0, 1.0};
};

}  // namespace detail

/// Δt = safety / (2·dim/h² + L_H/h + λ), L_H = m·s_max^{m−1}, s_max the largest
/// upwind slope of u over interior nodes.
inline double cfl_timestep(const Field& u, const ProblemSpec& p, double safety = 0.5) {
  detail::ExplicitKernel kernel(p);
  std::vector<double> res(u.size(), 0.0);
  const double smax = kernel.residual(u.values(), p, res);
  const double dt = kernel.timestep(smax, p, safety);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DivergenceError(0.0, u.max_abs());
  return dt;
}

/// Forward-Euler runs of several problems on one grid sharing a common time
/// step (the smallest CFL step of the members), so that one-step comparison
/// between members holds exactly.
inline std::vector<Trajectory> evolve_ensemble(std::span<const ProblemSpec> problems, double T, BoundaryKind kind,
                                               const EvolveOptions& opt = {}) {
  if (problems.empty()) throw InvalidArgument("evolve needs at least one problem");
  if (!(T > 0.0)) throw InvalidArgument("evolve horizon T must be > 0");
  const GridPtr& grid = problems.front().grid();
  for (const auto& p : problems) {
    p.validate(true);
    if (p.grid() != grid) throw InvalidArgument("ensemble members must share one grid");
    if (kind == BoundaryKind::StateConstraint && p.m <= 2.0) throw InvalidArgument("state constraint requires m > 2");
  }
  const double every = opt.sample_every > 0.0 ? opt.sample_every : T / 200.0;
  const std::size_t probe = opt.probe_node == static_cast<std::size_t>(-1) ? grid->center_node() : opt.probe_node;
  if (probe >= grid->size()) throw InvalidArgument("probe node out of range");

  const std::size_t nm = problems.size();
  std::vector<detail::ExplicitKernel> kernels;
  std::vector<Field> u, next;
  std::vector<std::vector<double>> res(nm, std::vector<double>(grid->size(), 0.0));
  std::vector<Trajectory> out(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    kernels.emplace_back(problems[i]);
    u.push_back(problems[i].u0);
    next.push_back(problems[i].u0);
    out[i].probe_node = probe;
  }
  auto record = [&](std::size_t i, double t, double rate, bool force_field) {
    out[i].times.push_back(t);
    out[i].probe.push_back(u[i][probe]);
    out[i].increment_rate.push_back(rate);
    if (opt.keep_fields || force_field) out[i].fields.push_back(u[i]);
  };
  for (std::size_t i = 0; i < nm; ++i) record(i, 0.0, 0.0, false);

  const std::size_t n_samples = static_cast<std::size_t>(std::ceil(T / every - 1e-9));
  double t = 0.0;
  std::size_t steps = 0;
  std::vector<double> last_rate(nm, 0.0);
  for (std::size_t s = 1; s <= n_samples; ++s) {
    const double t_next = s == n_samples ? T : std::min(T, static_cast<double>(s) * every);
    while (t < t_next) {
      double dt = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nm; ++i) {
        const double smax = kernels[i].residual(u[i].values(), problems[i], res[i]);
        dt = std::min(dt, kernels[i].timestep(smax, problems[i], opt.safety));
      }
      if (!(dt > 1e-300) || !std::isfinite(dt)) {
        double worst = 0.0;
        for (const auto& ui : u) worst = std::max(worst, ui.max_abs());
        throw DivergenceError(t, worst);
      }
      // Land exactly on sample times; split the remainder instead of leaving a sliver step.
      if (t + dt >= t_next) dt = t_next - t;
      else if (t + 1.5 * dt > t_next) dt = 0.5 * (t_next - t);
      const bool last = t + dt >= t_next;
      for (std::size_t i = 0; i < nm; ++i) {
        auto& ui = u[i];
        auto& ni = next[i];
        double inc = 0.0;
        for (std::size_t k : grid->interior()) {
          ni[k] = ui[k] - dt * res[i][k];
          inc = std::max(inc, std::abs(ni[k] - ui[k]));
        }
        for (std::size_t k : grid->boundary()) {
          const double v = boundary_update(ni, problems[i], k, kind);
          inc = std::max(inc, std::abs(v - ui[k]));
          ni[k] = v;
        }
        std::swap(ui, ni);
        last_rate[i] = inc / dt;
        const double mx = ui.max_abs();
        if (!(mx <= opt.divergence_cap)) throw DivergenceError(last ? t_next : t + dt, mx);
      }
      t = last ? t_next : t + dt;
      ++steps;
    }
    for (std::size_t i = 0; i < nm; ++i) record(i, t, last_rate[i], s == n_samples);
  }
  for (auto& tr : out) tr.steps = steps;
  return out;
}

/// Forward-Euler run of one problem: interior nodes by −pde_residual, boundary
/// nodes by boundary_update after every step.
inline Trajectory evolve(const ProblemSpec& p, double T, BoundaryKind kind, const EvolveOptions& opt = {}) {
  std::vector<ProblemSpec> one{p};
  return std::move(evolve_ensemble(one, T, kind, opt).front());
}

/// Long-format CSV: t, coordinates, value (one row per node per sample).
inline csv::Table trajectory_table(const Trajectory& tr) {
  const Grid& g = tr.fields.front().grid();
  std::vector<std::string> header{"t"};
  for (auto& c : csv::coordinate_header(g)) header.push_back(c);
  header.push_back("value");
  csv::Table table(header);
  for (std::size_t s = 0; s < tr.fields.size(); ++s) {
    // Fields may be thinned; match them to their sample times from the end.
    const std::size_t ti = tr.fields.size() == tr.times.size() ? s : tr.times.size() - tr.fields.size() + s;
    for (std::size_t k = 0; k < g.size(); ++k) {
      std::vector<std::string> row{csv::num(tr.times[ti])};
      csv::append_coordinates(row, g, k);
      row.push_back(csv::num(tr.fields[s][k]));
      table.add(std::move(row));
    }
  }
  return table;
}

inline csv::Table probe_table(const Trajectory& tr) {
  csv::Table table({"t", "probe_value", "increment_rate"});
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    table.add({csv::num(tr.times[s]), csv::num(tr.probe[s]), csv::num(tr.increment_rate[s])});
  }
  return table;
}

}  // namespace vhj

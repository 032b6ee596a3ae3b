#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/evolve.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

/// |v| over the first `dim` components (unused components are zero in 1D).
inline double norm(const Point& v) { return std::hypot(v[0], v[1]); }

/// a*(p) = −m|p|^{m−2}p, the minimizer of a·p + running_cost(a).
inline Point feedback_control(const Point& p, double m) {
  if (!(m > 1.0)) throw InvalidArgument("m must be > 1");
  const double n = norm(p);
  if (n == 0.0) return {0.0, 0.0};
  const double s = -m * std::pow(n, m - 2.0);
  return {s * p[0], s * p[1]};
}

/// (m−1) m^{−m/(m−1)} |a|^{m/(m−1)}.
inline double running_cost(const Point& a, double m) {
  const double q = m / (m - 1.0);
  return (m - 1.0) * std::pow(m, -q) * std::pow(norm(a), q);
}

/// a·p + running_cost(a) + |p|^m ≥ 0, zero iff a = feedback_control(p).
inline double legendre_gap(const Point& p, const Point& a, double m) {
  if (!(m > 1.0)) throw InvalidArgument("m must be > 1");
  return a[0] * p[0] + a[1] * p[1] + running_cost(a, m) + std::pow(norm(p), m);
}

struct McOptions {
  /// Paths whose step count would exceed this are truncated and flagged.
  std::size_t max_steps = 10'000'000;
  /// Keep per-path records for CSV export.
  bool keep_paths = true;
};

/// One Monte Carlo evaluation of the value function at a point.
struct ControlRun {
  Point x{0.0, 0.0};
  double T = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double exit_fraction = 0.0;
  /// Mean of τ_x over the paths that exited before T.
  double mean_exit_time = 0.0;
  std::size_t capped_paths = 0;
  std::vector<double> cost;
  std::vector<unsigned char> exited;
  std::vector<double> exit_time;
};

namespace detail {

/// One-sided differences on the staggered (midpoint) grid of each axis,
/// interpolated multilinearly with clamping.
class GradientSnapshot {
 public:
  explicit GradientSnapshot(const Field& u) : grid_(&u.grid()) {
    const Grid& g = *grid_;
    for (int a = 0; a < g.dimension(); ++a) {
      const std::size_t na = g.nodes(a), nb = g.dimension() == 2 ? g.nodes(1 - a) : 1;
      auto& d = diff_[a];
      d.assign((na - 1) * nb, 0.0);
      for (std::size_t j = 0; j < nb; ++j) {
        for (std::size_t i = 0; i + 1 < na; ++i) {
          const std::size_t k0 = a == 0 ? g.index(i, j) : g.index(j, i);
          const std::size_t k1 = k0 + g.stride(a);
          d[i + (na - 1) * j] = (u[k1] - u[k0]) / g.spacing(a);
        }
      }
    }
  }

  Point gradient(const Point& x) const {
    const Grid& g = *grid_;
    Point out{0.0, 0.0};
    for (int a = 0; a < g.dimension(); ++a) {
      const std::size_t na = g.nodes(a);
      const auto& ax = g.domain().axis(a);
      // Along a: midpoints at lo + (i + ½)h, i = 0..na−2.
      double ta = (x[a] - ax.lo) / g.spacing(a) - 0.5;
      ta = std::clamp(ta, 0.0, static_cast<double>(na - 2));
      std::size_t ia = std::min(static_cast<std::size_t>(ta), na - 2);
      const double wa = na > 2 ? ta - static_cast<double>(ia) : 0.0;
      const std::size_t ia1 = std::min(ia + 1, na - 2);
      if (g.dimension() == 1) {
        out[a] = (1.0 - wa) * diff_[a][ia] + wa * diff_[a][ia1];
        continue;
      }
      const int b = 1 - a;
      const std::size_t nb = g.nodes(b);
      const auto& bx = g.domain().axis(b);
      double tb = std::clamp((x[b] - bx.lo) / g.spacing(b), 0.0, static_cast<double>(nb - 1));
      std::size_t ib = std::min(static_cast<std::size_t>(tb), nb - 2);
      const double wb = tb - static_cast<double>(ib);
      const auto& d = diff_[a];
      const std::size_t w = na - 1;
      out[a] = (1.0 - wa) * (1.0 - wb) * d[ia + w * ib] + wa * (1.0 - wb) * d[ia1 + w * ib] +
               (1.0 - wa) * wb * d[ia + w * (ib + 1)] + wa * wb * d[ia1 + w * (ib + 1)];
    }
    return out;
  }

 private:
  const Grid* grid_;
  std::array<std::vector<double>, 2> diff_;
};

}  // namespace detail

/// Multilinear interpolation of a Field at an arbitrary point of the closed box.
inline double interpolate(const Field& u, const Point& x) {
  const Grid& g = u.grid();
  std::array<std::size_t, 2> i0{0, 0};
  std::array<double, 2> w{0.0, 0.0};
  for (int a = 0; a < g.dimension(); ++a) {
    const double t = std::clamp((x[a] - g.domain().axis(a).lo) / g.spacing(a), 0.0,
                                static_cast<double>(g.nodes(a) - 1));
    i0[a] = std::min(static_cast<std::size_t>(t), g.nodes(a) - 2);
    w[a] = t - static_cast<double>(i0[a]);
  }
  if (g.dimension() == 1) return (1.0 - w[0]) * u[i0[0]] + w[0] * u[i0[0] + 1];
  const std::size_t k = g.index(i0[0], i0[1]), sy = g.stride(1);
  return (1 - w[0]) * (1 - w[1]) * u[k] + w[0] * (1 - w[1]) * u[k + 1] + (1 - w[0]) * w[1] * u[k + sy] +
         w[0] * w[1] * u[k + sy + 1];
}

/// Monte Carlo estimate of the value function at x over horizon T:
///   E[ ∫_0^{τ∧T} f(X_s) + L(a_s) ds + g(X_τ) 1{τ ≤ T} + u0(X_T) 1{τ > T} ],
/// dX = a dt + √2 dB (generator Δ, matching −Δu), a_s = a*(Du(X_s, T − s))
/// with Du read from the snapshot nearest to T − s.
inline ControlRun mc_value(const ProblemSpec& p, const Trajectory& snapshots, const Point& x, double T,
                           std::size_t n_paths, double dt, std::uint64_t seed, const McOptions& opt = {}) {
  const Grid& g = *p.grid();
  const Domain& dom = g.domain();
  if (!(T > 0.0)) throw InvalidArgument("T must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  if (n_paths < 1) throw InvalidArgument("n_paths must be >= 1");
  for (int a = 0; a < g.dimension(); ++a) {
    if (!(x[a] > dom.axis(a).lo && x[a] < dom.axis(a).hi)) throw InvalidArgument("start point must be interior");
  }
  if (snapshots.fields.size() != snapshots.samples() || snapshots.samples() < 2) {
    throw InvalidArgument("snapshots must keep every sampled field");
  }
  if (snapshots.times.back() < T * (1.0 - 1e-12)) throw InvalidArgument("snapshots must cover [0, T]");

  std::vector<detail::GradientSnapshot> grads;
  grads.reserve(snapshots.samples());
  for (const auto& f : snapshots.fields) grads.emplace_back(f);
  auto nearest = [&](double t) {
    const auto& ts = snapshots.times;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return ts.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - ts.begin());
    if (i > 0 && t - ts[i - 1] <= ts[i] - t) --i;
    return i;
  };

  std::size_t steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const bool capped = steps > opt.max_steps;
  if (capped) steps = opt.max_steps;
  const double h = T / static_cast<double>(std::ceil(T / dt - 1e-9));
  // Snapshot index per step, shared by every path.
  std::vector<std::size_t> snap(steps);
  for (std::size_t i = 0; i < steps; ++i) snap[i] = nearest(T - static_cast<double>(i) * h);

  ControlRun run;
  run.x = x;
  run.T = T;
  run.n_paths = n_paths;
  run.dt = h;
  run.seed = seed;
  if (opt.keep_paths) {
    run.cost.resize(n_paths);
    run.exited.resize(n_paths);
    run.exit_time.resize(n_paths);
  }
  const int dim = g.dimension();
  const double sig = std::sqrt(2.0 * h);
  double sum = 0.0, sum2 = 0.0, exit_sum = 0.0;
  std::size_t n_exit = 0;
  for (std::size_t path = 0; path < n_paths; ++path) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    std::mt19937_64 rng(ss);
    std::normal_distribution<double> normal(0.0, 1.0);
    Point X = x;
    double cost = 0.0, tau = std::numeric_limits<double>::infinity();
    bool out = false;
    for (std::size_t i = 0; i < steps && !out; ++i) {
      const Point a = feedback_control(grads[snap[i]].gradient(X), p.m);
      const double integrand = interpolate(p.f, X) + p.c_shift + running_cost(a, p.m);
      Point Y = X;
      for (int d = 0; d < dim; ++d) Y[d] += a[d] * h + sig * normal(rng);
      // First face crossed along the segment X → Y.
      double theta = 1.0;
      for (int d = 0; d < dim; ++d) {
        const auto& ax = dom.axis(d);
        if (Y[d] < ax.lo) theta = std::min(theta, (X[d] - ax.lo) / (X[d] - Y[d]));
        if (Y[d] > ax.hi) theta = std::min(theta, (ax.hi - X[d]) / (Y[d] - X[d]));
      }
      if (theta < 1.0) {
        Point E{X[0] + theta * (Y[0] - X[0]), X[1] + theta * (Y[1] - X[1])};
        for (int d = 0; d < dim; ++d) E[d] = std::clamp(E[d], dom.axis(d).lo, dom.axis(d).hi);
        cost += theta * h * integrand + interpolate(p.g, E);
        tau = (static_cast<double>(i) + theta) * h;
        out = true;
      } else {
        cost += h * integrand;
        X = Y;
      }
    }
    if (!out) cost += interpolate(p.u0, X);
    sum += cost;
    sum2 += cost * cost;
    if (out) {
      ++n_exit;
      exit_sum += tau;
    }
    if (capped) ++run.capped_paths;
    if (opt.keep_paths) {
      run.cost[path] = cost;
      run.exited[path] = out ? 1 : 0;
      run.exit_time[path] = out ? tau : T;
    }
  }
  const double n = static_cast<double>(n_paths);
  run.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum2 - n * run.mean * run.mean) / (n - 1.0)) : 0.0;
  run.std_error = std::sqrt(var / n);
  run.exit_fraction = static_cast<double>(n_exit) / n;
  run.mean_exit_time = n_exit ? exit_sum / static_cast<double>(n_exit) : 0.0;
  return run;
}

/// Per-path cost, exit flag and exit time (T when the path stayed inside).
inline csv::Table path_table(const ControlRun& run) {
  csv::Table t({"path", "cost", "exited", "exit_time"});
  for (std::size_t i = 0; i < run.cost.size(); ++i) {
    t.add({csv::num(i), csv::num(run.cost[i]), run.exited[i] ? "1" : "0", csv::num(run.exit_time[i])});
  }
  return t;
}

}  // namespace vhj

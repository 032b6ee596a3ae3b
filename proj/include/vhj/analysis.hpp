#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/ergodic.hpp"
#include "vhj/evolve.hpp"
#include "vhj/numerics.hpp"
#include "vhj/scheme.hpp"
#include "vhj/stationary.hpp"

namespace vhj {

// ---------------------------------------------------------------- trichotomy

enum class Regime { NegativeC, ZeroC, PositiveC, Inconclusive };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::NegativeC: return "NegativeC";
    case Regime::ZeroC: return "ZeroC";
    case Regime::PositiveC: return "PositiveC";
    case Regime::Inconclusive: return "Inconclusive";
  }
  return "unknown";
}

struct TrichotomyOptions {
  double tau_c = 0.05;
  /// Sup-norm tolerance for the limit-profile comparison.
  double profile_tol = 5e-2;
  /// Allowed tail oscillation of u(x*, t) + ct.
  double oscillation_tol = 0.1;
  /// Boundary deficit g − u counted as loss.
  double loss_tol = 1e-6;
};

struct TrichotomyReport {
  double c = 0.0;
  /// Regime read off the sign of c alone.
  Regime sign_regime = Regime::ZeroC;
  /// sign_regime if the evidence supports it, otherwise Inconclusive.
  Regime regime = Regime::Inconclusive;
  /// ‖u(·,T) − limit‖∞, the limit being u_stat, u_∞ + K_1 − cT or u_∞ − C̃.
  double profile_distance = 0.0;
  /// −slope of u(x*, ·) over the tail window.
  double drift = 0.0;
  /// Tail oscillation of u(x*, t) + ct.
  double tail_oscillation = 0.0;
  /// Fitted offset: K_1 when c > 0, −C̃ when c = 0, 0 otherwise.
  double offset = 0.0;
  bool boundary_loss = false;
  bool stationary_converged = false;
  double tail_start = 0.0;
  double tail_end = 0.0;
  std::size_t tail_samples = 0;
  TrichotomyOptions options;
  std::string note;
};

/// Classifies the long-time regime of a RelaxedDirichlet run of `p` from the
/// ergodic constant and checks the matching limit statement on the tail of `traj`.
inline TrichotomyReport classify_trichotomy(const ErgodicPair& pair, const Trajectory& traj, const ProblemSpec& p,
                                            const TrichotomyOptions& opt = {}) {
  if (traj.fields.empty() || traj.samples() < 2) throw InvalidArgument("trajectory has no samples");
  TrichotomyReport rep;
  rep.options = opt;
  rep.c = pair.c;
  const double T = traj.times.back();
  rep.tail_start = 0.5 * T;
  rep.tail_end = T;
  std::vector<double> tt, tv;
  for (std::size_t s = 0; s < traj.samples(); ++s) {
    if (traj.times[s] >= rep.tail_start - 1e-12) {
      tt.push_back(traj.times[s]);
      tv.push_back(traj.probe[s]);
    }
  }
  rep.tail_samples = tt.size();
  if (tt.size() < 20) throw InvalidArgument("tail window [T/2, T] needs >= 20 samples");
  rep.drift = slope_estimate_c(traj, rep.tail_start, T);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    const double w = tv[i] + pair.c * tt[i];
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  rep.tail_oscillation = hi - lo;

  const Field& uT = traj.final_field();
  const Grid& g = uT.grid();
  for (std::size_t k : g.boundary()) {
    if (p.g[k] - uT[k] > opt.loss_tol) rep.boundary_loss = true;
  }

  rep.sign_regime = pair.c < -opt.tau_c ? Regime::NegativeC : pair.c > opt.tau_c ? Regime::PositiveC : Regime::ZeroC;
  bool consistent = false;
  if (rep.sign_regime == Regime::NegativeC) {
    ProblemSpec q = p;
    q.lambda = 0.0;
    q.u0 = uT;
    const SteadyResult st = solve_stationary(q, BoundaryKind::RelaxedDirichlet);
    rep.stationary_converged = st.converged;
    rep.profile_distance = sup_distance(uT, st.solution);
    consistent = st.converged && rep.profile_distance < opt.profile_tol && std::abs(rep.drift) < opt.tau_c;
    if (!st.converged) rep.note = "stationary problem did not converge";
  } else {
    // u(·,T) + cT − u_∞ should be constant; median is robust to collar error.
    std::vector<double> diff(uT.size());
    for (std::size_t k = 0; k < uT.size(); ++k) diff[k] = uT[k] + pair.c * T - pair.u_infinity[k];
    rep.offset = median(diff);
    double dist = 0.0;
    for (double v : diff) dist = std::max(dist, std::abs(v - rep.offset));
    rep.profile_distance = dist;
    if (rep.sign_regime == Regime::PositiveC) {
      consistent = dist < opt.profile_tol && rep.tail_oscillation < opt.oscillation_tol &&
                   std::abs(rep.drift - pair.c) < std::max(opt.tau_c, 0.05 * std::abs(pair.c));
    } else {
      bool capped = true;
      for (std::size_t k : g.boundary()) capped = capped && uT[k] <= p.g[k] + opt.loss_tol;
      consistent = dist < opt.profile_tol && capped && std::abs(rep.drift) < opt.tau_c;
    }
  }
  rep.regime = consistent ? rep.sign_regime : Regime::Inconclusive;
  if (!consistent && rep.note.empty()) rep.note = "evidence contradicts the sign of c";
  return rep;
}

// ---------------------------------------------------------------- exponent fits

/// Distance window for boundary-layer fits; zeros select the default
/// [max(3h, δ0/50), δ0/5].
struct FitWindow {
  double d_min = 0.0;
  double d_max = 0.0;
};

struct ExponentFit {
  /// False when the chains carry no usable variation (DegenerateFit).
  bool defined = false;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double prefactor = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples = 0;
  double d_min = 0.0;
  double d_max = 0.0;
  /// Scatter data: log d and log of the fitted quantity.
  std::vector<double> log_d;
  std::vector<double> log_value;
};

namespace detail {

/// A boundary-normal chain: nodes[0] on ∂Ω, nodes[j] at distance j·h.
struct Chain {
  std::vector<std::size_t> nodes;
  double h = 0.0;
};

/// Chains from every boundary node along its inward axis, cut where another
/// face becomes nearer (so d equals the chain length on every kept node).
inline std::vector<Chain> normal_chains(const Grid& g, double d_max) {
  std::vector<Chain> out;
  for (std::size_t b : g.boundary()) {
    int faces = 0, axis = 0;
    for (int a = 0; a < g.dimension(); ++a) {
      if (g.on_face(b, a)) {
        ++faces;
        axis = a;
      }
    }
    if (faces != 1) continue;  // corners have no single normal
    const auto ij = g.multi_index(b);
    const long dir = ij[axis] == 0 ? 1 : -1;
    const double h = g.spacing(axis);
    Chain c;
    c.h = h;
    c.nodes.push_back(b);
    const long n = static_cast<long>(g.nodes(axis));
    for (long j = 1;; ++j) {
      const long i = static_cast<long>(ij[axis]) + dir * j;
      if (i <= 0 || i >= n - 1) break;
      const double along = static_cast<double>(j) * h;
      if (along > d_max * (1.0 + 1e-12) + h) break;
      auto idx = ij;
      idx[axis] = static_cast<std::size_t>(i);
      const std::size_t k = g.index(idx[0], idx[1]);
      if (g.domain().distance(g.point(k)) < along - 1e-9 * h) break;
      c.nodes.push_back(k);
    }
    if (c.nodes.size() > 1) out.push_back(std::move(c));
  }
  return out;
}

inline FitWindow resolve_window(const Grid& g, FitWindow w) {
  const double delta0 = g.domain().delta0();
  const double h = g.min_spacing();
  if (delta0 / h < 8.0) throw InvalidArgument("exponent fit needs >= 8 nodes in the boundary collar");
  if (w.d_min <= 0.0) w.d_min = std::max(3.0 * h, delta0 / 50.0);
  if (w.d_max <= 0.0) w.d_max = delta0 / 5.0;
  if (!(w.d_max > w.d_min)) throw InvalidArgument("fit window must satisfy d_min < d_max");
  return w;
}

inline ExponentFit fit_scatter(std::vector<double> x, std::vector<double> y, const FitWindow& w) {
  ExponentFit out;
  out.d_min = w.d_min;
  out.d_max = w.d_max;
  out.samples = x.size();
  if (x.size() >= 2) {
    const double x0 = *std::min_element(x.begin(), x.end()), x1 = *std::max_element(x.begin(), x.end());
    if (x1 > x0) {
      const LineFit f = least_squares_line(x, y);
      out.defined = true;
      out.exponent = f.slope;
      out.prefactor = std::exp(f.intercept);
    }
  }
  out.log_d = std::move(x);
  out.log_value = std::move(y);
  return out;
}

}  // namespace detail

/// Fits |u(x) − u(x_b)| ≈ K̂ |x − x_b|^β over boundary-normal chains, pooled.
inline ExponentFit holder_fit(const Field& u, FitWindow window = {}) {
  const Grid& g = u.grid();
  const FitWindow w = detail::resolve_window(g, window);
  std::vector<double> x, y;
  for (const auto& c : detail::normal_chains(g, w.d_max)) {
    const double ub = u[c.nodes[0]];
    for (std::size_t j = 1; j < c.nodes.size(); ++j) {
      const double d = static_cast<double>(j) * c.h;
      if (d < w.d_min * (1.0 - 1e-12) || d > w.d_max * (1.0 + 1e-12)) continue;
      const double diff = std::abs(u[c.nodes[j]] - ub);
      if (!(diff > 0.0) || !std::isfinite(diff)) continue;
      x.push_back(std::log(d));
      y.push_back(std::log(diff));
    }
  }
  return detail::fit_scatter(std::move(x), std::move(y), w);
}

/// Fits |Du| ≈ Λ d^s over the collar, with |Du| the one-sided difference
/// between consecutive chain nodes placed at the cell midpoint. Expected
/// s ≈ −1/(m−1).
inline ExponentFit blowup_fit(const Field& u, FitWindow window = {}) {
  const Grid& g = u.grid();
  const FitWindow w = detail::resolve_window(g, window);
  std::vector<double> x, y;
  for (const auto& c : detail::normal_chains(g, w.d_max)) {
    for (std::size_t j = 1; j < c.nodes.size(); ++j) {
      const double d = (static_cast<double>(j) - 0.5) * c.h;
      if (d < w.d_min * (1.0 - 1e-12) || d > w.d_max * (1.0 + 1e-12)) continue;
      const double grad = std::abs(u[c.nodes[j]] - u[c.nodes[j - 1]]) / c.h;
      if (!(grad > 0.0) || !std::isfinite(grad)) continue;
      x.push_back(std::log(d));
      y.push_back(std::log(grad));
    }
  }
  return detail::fit_scatter(std::move(x), std::move(y), w);
}

inline csv::Table fit_table(const ExponentFit& f) {
  csv::Table t({"log_d", "log_value"});
  for (std::size_t i = 0; i < f.log_d.size(); ++i) t.add({csv::num(f.log_d[i]), csv::num(f.log_value[i])});
  return t;
}

// ---------------------------------------------------------------- boundary loss

struct LossReport {
  /// One flag per boundary node, in grid().boundary() order.
  std::vector<bool> lost;
  std::vector<std::size_t> losing_nodes;
  double max_deficit = 0.0;
  double tol = 0.0;
  bool any() const { return !losing_nodes.empty(); }
  bool all() const { return !lost.empty() && losing_nodes.size() == lost.size(); }
};

/// Flags boundary nodes where the trace detaches below the data: g − u > tol.
inline LossReport boundary_loss(const Field& u, const Field& g, double tol) {
  if (u.grid_ptr() != g.grid_ptr()) throw InvalidArgument("u and g must share a grid");
  LossReport rep;
  rep.tol = tol;
  rep.max_deficit = -std::numeric_limits<double>::infinity();
  for (std::size_t k : u.grid().boundary()) {
    const double deficit = g[k] - u[k];
    rep.max_deficit = std::max(rep.max_deficit, deficit);
    const bool lost = deficit > tol;
    rep.lost.push_back(lost);
    if (lost) rep.losing_nodes.push_back(k);
  }
  return rep;
}

// ---------------------------------------------------------------- contraction

struct ContractionReport {
  /// min over sample times of bound(t) − sup(u1 − u2)⁺(t); ≥ 0 means the estimate holds.
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_time = 0.0;
  std::size_t samples = 0;
  bool ok() const { return worst_margin >= 0.0; }
};

/// sup(u1−u2)⁺(t) ≤ t·sup(f1−f2)⁺ + e^{−λt} sup(u0−v0)⁺ + sup(g1−g2)⁺ + slack.
inline ContractionReport check_contraction(const Trajectory& run1, const Trajectory& run2, const ProblemSpec& p1,
                                           const ProblemSpec& p2, double slack) {
  if (p1.grid() != p2.grid()) throw InvalidArgument("runs must share a grid");
  if (p1.m != p2.m || p1.lambda != p2.lambda) throw InvalidArgument("runs must share m and lambda");
  if (run1.samples() != run2.samples()) throw InvalidArgument("runs must share sample times");
  if (run1.fields.size() != run1.samples() || run2.fields.size() != run2.samples()) {
    throw InvalidArgument("contraction check needs every sampled field");
  }
  const Grid& g = *p1.grid();
  double df = 0.0, dg = 0.0;
  for (std::size_t k : g.interior()) df = std::max(df, p1.f[k] + p1.c_shift - p2.f[k] - p2.c_shift);
  for (std::size_t k : g.boundary()) dg = std::max(dg, p1.g[k] - p2.g[k]);
  const double du0 = sup_positive_part(p1.u0, p2.u0);
  ContractionReport rep;
  for (std::size_t s = 0; s < run1.samples(); ++s) {
    const double t = run1.times[s];
    if (std::abs(t - run2.times[s]) > 1e-12 * (1.0 + t)) throw InvalidArgument("runs must share sample times");
    const double lhs = sup_positive_part(run1.fields[s], run2.fields[s]);
    const double bound = t * df + std::exp(-p1.lambda * t) * du0 + dg + slack;
    const double margin = bound - lhs;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_time = t;
    }
    ++rep.samples;
  }
  return rep;
}

// ---------------------------------------------------------------- barrier

/// ζ = −(M/α) d^α + K/λ.
inline double barrier_value(double d, double M, double K, double lambda, double alpha) {
  if (!(lambda > 0.0)) throw InvalidArgument("barrier needs lambda > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("barrier needs alpha in (0, 1)");
  if (d < 0.0) throw InvalidArgument("barrier needs d >= 0");
  return -(M / alpha) * std::pow(d, alpha) + K / lambda;
}

struct BarrierConstants {
  double alpha = 0.0;
  double M = 0.0;
  double K = 0.0;
  double delta = 0.0;
};

/// Smallest admissible M and K (times `safety`) for a box: Δd = 0 away from the
/// ridge, δ = δ0, ‖d^{α−2}‖ over Ω_δ is δ^{α−2}, ‖d^α‖ is (half the shortest side)^α.
inline BarrierConstants barrier_constants(double m, const Domain& domain, double f_sup, double safety = 1.01) {
  if (!(m > 2.0)) throw InvalidArgument("barrier needs m > 2");
  if (!(safety > 1.0)) throw InvalidArgument("safety factor must exceed 1");
  BarrierConstants b;
  b.alpha = holder_exponent(m);
  b.delta = domain.delta0();
  const double a = b.alpha, dl = b.delta;
  const double lap_d = 0.0;
  b.M = safety * std::pow((1.0 - a) + dl * lap_d + dl * dl / a, 1.0 / (m - 1.0));
  const double d_max = 0.5 * domain.min_length();
  const double k_interior = b.M * ((1.0 - a) * std::pow(dl, a - 2.0) + 0.0 + std::pow(d_max, a) / a) + 3.0 * f_sup;
  b.K = safety * std::max(2.0 * f_sup, k_interior);
  return b;
}

struct SandwichReport {
  /// min over nodes of u − (−‖f‖/λ) and of ζ − u; both ≥ −slack when the sandwich holds.
  double lower_margin = std::numeric_limits<double>::infinity();
  double upper_margin = std::numeric_limits<double>::infinity();
  double slack = 0.0;
  bool ok() const { return lower_margin >= -slack && upper_margin >= -slack; }
};

inline SandwichReport barrier_sandwich(const Field& u_lambda, const ProblemSpec& p, const BarrierConstants& b,
                                       double slack) {
  SandwichReport rep;
  rep.slack = slack;
  const double f_sup = p.f.max_abs();
  const Grid& g = u_lambda.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = g.domain().distance(g.point(k));
    rep.lower_margin = std::min(rep.lower_margin, u_lambda[k] + f_sup / p.lambda);
    rep.upper_margin = std::min(rep.upper_margin, barrier_value(d, b.M, b.K, p.lambda, b.alpha) - u_lambda[k]);
  }
  return rep;
}

// ---------------------------------------------------------------- serialization

inline std::string to_key_values(const TrichotomyReport& r) {
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  kv("regime", to_string(r.regime));
  kv("sign_regime", to_string(r.sign_regime));
  kv("c", csv::num(r.c));
  kv("drift", csv::num(r.drift));
  kv("profile_distance", csv::num(r.profile_distance));
  kv("tail_oscillation", csv::num(r.tail_oscillation));
  kv("offset", csv::num(r.offset));
  kv("boundary_loss", r.boundary_loss ? "true" : "false");
  kv("tail_window", csv::num(r.tail_start) + ":" + csv::num(r.tail_end));
  kv("tail_samples", csv::num(r.tail_samples));
  kv("tau_c", csv::num(r.options.tau_c));
  kv("profile_tol", csv::num(r.options.profile_tol));
  kv("oscillation_tol", csv::num(r.options.oscillation_tol));
  if (!r.note.empty()) kv("note", r.note);
  return s;
}

inline std::string to_key_values(const ExponentFit& f, const std::string& name) {
  std::string s;
  s += name + ".defined=" + (f.defined ? "true" : "false") + "\n";
  if (f.defined) {
    s += name + ".exponent=" + csv::num(f.exponent) + "\n";
    s += name + ".prefactor=" + csv::num(f.prefactor) + "\n";
  }
  s += name + ".samples=" + csv::num(f.samples) + "\n";
  s += name + ".window=" + csv::num(f.d_min) + ":" + csv::num(f.d_max) + "\n";
  return s;
}

inline std::string to_key_values(const LossReport& r) {
  std::string s;
  s += "loss.any=" + std::string(r.any() ? "true" : "false") + "\n";
  s += "loss.all=" + std::string(r.all() ? "true" : "false") + "\n";
  s += "loss.count=" + csv::num(r.losing_nodes.size()) + "\n";
  s += "loss.max_deficit=" + csv::num(r.max_deficit) + "\n";
  s += "loss.tol=" + csv::num(r.tol) + "\n";
  return s;
}

}  // namespace vhj

#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vhj/analysis.hpp"
#include "vhj/control.hpp"
#include "vhj/csv.hpp"
#include "vhj/domain.hpp"
#include "vhj/ergodic.hpp"
#include "vhj/evolve.hpp"
#include "vhj/oracle1d.hpp"
#include "vhj/scheme.hpp"
#include "vhj/stationary.hpp"

namespace vhj {

/// Config validation failure; the message starts with the offending field path.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& field, const std::string& msg) : InvalidArgument(field + ": " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Built-in source / data profiles.
///   constant: value
///   cosine:   offset + amplitude · Π_a cos(frequency·π·x_a + phase)
///   gaussian: offset + amplitude · exp(−|x − center|² / (2 width²))
///   table:    piecewise-linear through (x, values), 1D only
struct Profile {
  std::string type = "constant";
  double value = 0.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  double phase = 0.0;
  double offset = 0.0;
  double width = 0.25;
  Point center{0.0, 0.0};
  std::vector<double> table_x;
  std::vector<double> table_values;

  double operator()(const Point& x, int dim) const {
    if (type == "constant") return value;
    if (type == "cosine") {
      double v = amplitude;
      for (int a = 0; a < dim; ++a) v *= std::cos(frequency * std::numbers::pi * x[a] + phase);
      return offset + v;
    }
    if (type == "gaussian") {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
      return offset + amplitude * std::exp(-r2 / (2.0 * width * width));
    }
    // table
    const double t = std::clamp(x[0], table_x.front(), table_x.back());
    auto it = std::upper_bound(table_x.begin(), table_x.end(), t);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - table_x.begin()), table_x.size() - 1);
    const std::size_t i0 = i - 1;
    const double w = (t - table_x[i0]) / (table_x[i] - table_x[i0]);
    return (1.0 - w) * table_values[i0] + w * table_values[i];
  }

  Field sample(const GridPtr& grid) const {
    const int dim = grid->dimension();
    return Field::from_function(grid, [&](const Point& x) { return (*this)(x, dim); });
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string kind;
  std::vector<Interval> axes;
  std::vector<std::size_t> nodes;
  double m = 3.0;
  double lambda = 0.0;
  BoundaryKind boundary = BoundaryKind::RelaxedDirichlet;
  Profile f, g, u0;
  std::uint64_t seed = 0;
  std::string output = "out";

  // evolve / trichotomy / montecarlo
  double T = 1.0;
  double sample_every = 0.0;
  // stationary
  double tol = 1e-6;
  double t_max = 200.0;
  std::optional<bool> expect_converged;
  // ergodic / trichotomy
  std::vector<double> lambdas;
  double ergodic_tol = 1e-2;
  bool richardson = false;
  bool characterize = true;
  double probe_margin = 0.2;
  // trichotomy: target ergodic constants realized by shifting f
  std::vector<double> targets{1.0, -1.0};
  double tau_c = 0.05;
  double profile_tol = 5e-2;
  double oscillation_tol = 0.1;
  // threshold1d
  std::vector<double> c_factors{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 1.0, 1.5};
  std::optional<double> epsilon_tol;
  // montecarlo
  std::vector<Point> probes;
  std::size_t paths = 10000;
  double mc_dt = 1e-4;
  double mc_slack = 0.05;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }) == allowed.end()) {
      throw ConfigError(where + "." + it.key(), "unknown field");
    }
  }
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

inline std::vector<double> numbers(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline Profile parse_profile(const json& j, const std::string& field) {
  Profile p;
  if (j.is_number()) {
    p.value = number(j, field);
    return p;
  }
  if (!j.is_object()) throw ConfigError(field, "expected a number or a profile object");
  reject_unknown(j, field,
                 {"profile", "value", "amplitude", "frequency", "phase", "offset", "width", "center", "x", "values"});
  if (!j.contains("profile")) throw ConfigError(field + ".profile", "missing");
  p.type = j["profile"].get<std::string>();
  if (p.type != "constant" && p.type != "cosine" && p.type != "gaussian" && p.type != "table") {
    throw ConfigError(field + ".profile", "unknown profile '" + p.type + "' (constant|cosine|gaussian|table)");
  }
  auto opt = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = number(j[key], field + "." + key);
  };
  opt("value", p.value);
  opt("amplitude", p.amplitude);
  opt("frequency", p.frequency);
  opt("phase", p.phase);
  opt("offset", p.offset);
  opt("width", p.width);
  if (j.contains("center")) {
    const auto c = numbers(j["center"], field + ".center");
    if (c.empty() || c.size() > 2) throw ConfigError(field + ".center", "expected 1 or 2 coordinates");
    for (std::size_t a = 0; a < c.size(); ++a) p.center[a] = c[a];
  }
  if (p.type == "gaussian" && !(p.width > 0.0)) throw ConfigError(field + ".width", "must be > 0");
  if (p.type == "table") {
    if (!j.contains("x") || !j.contains("values")) throw ConfigError(field, "table profile needs 'x' and 'values'");
    p.table_x = numbers(j["x"], field + ".x");
    p.table_values = numbers(j["values"], field + ".values");
    if (p.table_x.size() < 2 || p.table_x.size() != p.table_values.size()) {
      throw ConfigError(field + ".values", "needs >= 2 entries, one per x");
    }
    for (std::size_t i = 1; i < p.table_x.size(); ++i) {
      if (!(p.table_x[i] > p.table_x[i - 1])) throw ConfigError(field + ".x", "must be strictly increasing");
    }
  }
  return p;
}

}  // namespace detail

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"evolve",    "stationary",  "ergodic",
                                              "trichotomy", "threshold1d", "montecarlo"};
  return kinds;
}

/// Parses and validates a config document. Errors name the offending field.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::number;
  using detail::numbers;
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  detail::reject_unknown(j, "config",
                         {"name", "kind", "domain", "grid", "m", "lambda", "boundary", "f", "g", "u0", "seed", "output",
                          "evolve", "stationary", "ergodic", "trichotomy", "threshold1d", "montecarlo"});
  ExperimentConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  if (!j.contains("kind")) throw ConfigError("config.kind", "missing");
  c.kind = j["kind"].get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) {
    throw ConfigError("config.kind", "unknown experiment kind '" + c.kind + "'");
  }

  if (!j.contains("domain")) throw ConfigError("config.domain", "missing");
  const auto& d = j["domain"];
  if (!d.is_object()) throw ConfigError("config.domain", "expected an object with 'x' (and optional 'y')");
  detail::reject_unknown(d, "config.domain", {"x", "y"});
  for (const char* ax : {"x", "y"}) {
    if (!d.contains(ax)) continue;
    const auto b = numbers(d[ax], std::string("config.domain.") + ax);
    if (b.size() != 2 || !(b[1] > b[0])) {
      throw ConfigError(std::string("config.domain.") + ax, "expected [lo, hi] with lo < hi");
    }
    c.axes.push_back({b[0], b[1]});
  }
  if (c.axes.empty() || !d.contains("x")) throw ConfigError("config.domain.x", "missing");

  if (!j.contains("grid")) throw ConfigError("config.grid", "missing");
  const auto& g = j["grid"];
  const auto& gn = g.is_object() ? g.value("nodes", nlohmann::json()) : g;
  if (gn.is_number_integer()) {
    c.nodes.assign(c.axes.size(), gn.get<std::size_t>());
  } else if (gn.is_array()) {
    for (const auto& v : gn) {
      if (!v.is_number_integer()) throw ConfigError("config.grid.nodes", "expected integers");
      c.nodes.push_back(v.get<std::size_t>());
    }
  } else {
    throw ConfigError("config.grid.nodes", "expected an integer or an array of integers");
  }
  if (c.nodes.size() != c.axes.size()) throw ConfigError("config.grid.nodes", "needs one entry per domain axis");
  for (std::size_t n : c.nodes) {
    if (n < 3) throw ConfigError("config.grid.nodes", "no interior node: each entry must be >= 3");
  }

  if (j.contains("m")) c.m = number(j["m"], "config.m");
  if (!(c.m > 1.0)) throw ConfigError("config.m", "must be > 1 (got " + csv::num(c.m) + ")");
  if (j.contains("lambda")) c.lambda = number(j["lambda"], "config.lambda");
  if (!(c.lambda >= 0.0)) throw ConfigError("config.lambda", "must be >= 0 (got " + csv::num(c.lambda) + ")");
  if (j.contains("boundary")) {
    const auto b = j["boundary"].get<std::string>();
    if (b == "relaxed_dirichlet") c.boundary = BoundaryKind::RelaxedDirichlet;
    else if (b == "state_constraint") c.boundary = BoundaryKind::StateConstraint;
    else throw ConfigError("config.boundary", "expected relaxed_dirichlet or state_constraint");
  }
  if (c.boundary == BoundaryKind::StateConstraint && c.m <= 2.0) {
    throw ConfigError("config.boundary", "state_constraint requires m > 2");
  }
  if (j.contains("f")) c.f = detail::parse_profile(j["f"], "config.f");
  if (j.contains("g")) c.g = detail::parse_profile(j["g"], "config.g");
  if (j.contains("u0")) c.u0 = detail::parse_profile(j["u0"], "config.u0");
  for (const auto* p : {&c.f, &c.g, &c.u0}) {
    if (p->type == "table" && c.axes.size() != 1) throw ConfigError("config", "table profiles are 1D only");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("config.seed", "expected a nonnegative integer");
    }
    if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0) {
      throw ConfigError("config.seed", "expected a nonnegative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = j["output"].get<std::string>();

  const std::string sec = "config." + c.kind;
  const nlohmann::json s = j.value(c.kind, nlohmann::json::object());
  for (const auto& other : kinds) {
    if (other != c.kind && j.contains(other)) throw ConfigError("config." + other, "section does not match kind");
  }
  auto pos = [&](const char* key, double& dst) {
    if (!s.contains(key)) return;
    dst = number(s[key], sec + "." + key);
    if (!(dst > 0.0)) throw ConfigError(sec + "." + key, "must be > 0");
  };
  if (c.kind == "evolve" || c.kind == "trichotomy" || c.kind == "montecarlo") {
    pos("T", c.T);
    if (s.contains("sample_every")) pos("sample_every", c.sample_every);
  }
  if (c.kind == "evolve") detail::reject_unknown(s, sec, {"T", "sample_every"});
  if (c.kind == "stationary") {
    detail::reject_unknown(s, sec, {"tol", "t_max", "expect_converged"});
    pos("tol", c.tol);
    pos("t_max", c.t_max);
    if (s.contains("expect_converged")) c.expect_converged = s["expect_converged"].get<bool>();
  }
  if (c.kind == "ergodic" || c.kind == "trichotomy") {
    if (s.contains("lambdas")) {
      c.lambdas = numbers(s["lambdas"], sec + ".lambdas");
      if (c.lambdas.size() < 3) throw ConfigError(sec + ".lambdas", "needs at least 3 values");
      for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        if (!(c.lambdas[i] > 0.0 && c.lambdas[i] <= 1.0)) throw ConfigError(sec + ".lambdas", "values must lie in (0, 1]");
        if (i && !(c.lambdas[i] < c.lambdas[i - 1])) throw ConfigError(sec + ".lambdas", "must be strictly decreasing");
      }
    }
    pos("tol", c.ergodic_tol);
    if (s.contains("richardson")) c.richardson = s["richardson"].get<bool>();
    if (c.m <= 2.0) throw ConfigError("config.m", "ergodic problems require m > 2");
  }
  if (c.kind == "ergodic") {
    detail::reject_unknown(s, sec, {"lambdas", "tol", "richardson", "characterize", "probe_margin"});
    if (s.contains("characterize")) c.characterize = s["characterize"].get<bool>();
    pos("probe_margin", c.probe_margin);
  }
  if (c.kind == "trichotomy") {
    detail::reject_unknown(s, sec,
                           {"T", "sample_every", "lambdas", "tol", "richardson", "targets", "tau_c", "profile_tol",
                            "oscillation_tol"});
    if (s.contains("targets")) c.targets = numbers(s["targets"], sec + ".targets");
    if (c.targets.empty()) throw ConfigError(sec + ".targets", "needs at least one target");
    pos("tau_c", c.tau_c);
    pos("profile_tol", c.profile_tol);
    pos("oscillation_tol", c.oscillation_tol);
  }
  if (c.kind == "threshold1d") {
    detail::reject_unknown(s, sec, {"c_factors", "epsilon_tol", "t_max"});
    if (c.axes.size() != 1 || std::abs(c.axes[0].lo + c.axes[0].hi) > 1e-12 * c.axes[0].length()) {
      throw ConfigError("config.domain", "threshold1d needs a symmetric interval (-R, R)");
    }
    if (c.m <= 2.0) throw ConfigError("config.m", "threshold1d requires m > 2");
    if (s.contains("c_factors")) c.c_factors = numbers(s["c_factors"], sec + ".c_factors");
    for (double v : c.c_factors) {
      if (!(v > 0.0)) throw ConfigError(sec + ".c_factors", "values must be > 0");
    }
    if (s.contains("epsilon_tol")) {
      double e = 0.0;
      pos("epsilon_tol", e);
      c.epsilon_tol = e;
    }
    pos("t_max", c.t_max);
  }
  if (c.kind == "montecarlo") {
    detail::reject_unknown(s, sec, {"T", "sample_every", "probes", "paths", "dt", "slack"});
    if (!s.contains("probes")) throw ConfigError(sec + ".probes", "missing");
    if (!s["probes"].is_array() || s["probes"].empty()) throw ConfigError(sec + ".probes", "expected a nonempty array");
    for (std::size_t i = 0; i < s["probes"].size(); ++i) {
      const std::string f = sec + ".probes[" + std::to_string(i) + "]";
      const auto& v = s["probes"][i];
      Point p{0.0, 0.0};
      if (v.is_number()) {
        p[0] = number(v, f);
      } else {
        const auto xs = numbers(v, f);
        if (xs.size() != c.axes.size()) throw ConfigError(f, "needs one coordinate per axis");
        for (std::size_t a = 0; a < xs.size(); ++a) p[a] = xs[a];
      }
      for (std::size_t a = 0; a < c.axes.size(); ++a) {
        if (!(p[a] > c.axes[a].lo && p[a] < c.axes[a].hi)) throw ConfigError(f, "probe must be interior");
      }
      c.probes.push_back(p);
    }
    if (s.contains("paths")) {
      if (!s["paths"].is_number_integer() || s["paths"].get<long long>() < 1) {
        throw ConfigError(sec + ".paths", "expected a positive integer");
      }
      c.paths = s["paths"].get<std::size_t>();
    }
    pos("dt", c.mc_dt);
    pos("slack", c.mc_slack);
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError("config", std::string("wrong value type: ") + e.what());
  }
}

/// One section of the experiment summary.
struct Report {
  Report() = default;
  explicit Report(std::string name) : section(std::move(name)) {}

  std::string section;
  std::vector<std::pair<std::string, std::string>> entries;
  bool passed = true;
  bool inconclusive = false;
  std::vector<std::string> failures;

  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
  void add(const std::string& key, double value) { entries.emplace_back(key, csv::num(value)); }
  void add_bool(const std::string& key, bool value) { entries.emplace_back(key, value ? "true" : "false"); }
  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      failures.push_back(what);
    }
  }
};

/// Flat text summary: header, Inconclusive banner, then one [section] per
/// nonempty report, in the order given.
inline std::string emit_summary(const std::vector<Report>& reports) {
  if (reports.empty()) throw InvalidArgument("emit_summary needs at least one report");
  std::string out;
  bool passed = true;
  std::vector<std::string> inconclusive;
  for (const auto& r : reports) {
    passed = passed && r.passed;
    if (r.inconclusive) inconclusive.push_back(r.section);
  }
  out += std::string("status=") + (passed ? "PASS" : "FAIL") + "\n";
  if (!inconclusive.empty()) {
    out += "!! INCONCLUSIVE:";
    for (const auto& s : inconclusive) out += " " + s;
    out += "\n";
  }
  for (const auto& r : reports) {
    if (r.entries.empty() && r.failures.empty()) continue;
    out += "\n[" + r.section + "]\n";
    for (const auto& [k, v] : r.entries) out += k + "=" + v + "\n";
    for (const auto& f : r.failures) out += "FAILED: " + f + "\n";
  }
  return out;
}

struct RunOverrides {
  std::optional<std::string> output;
  double grid_scale = 1.0;
  std::optional<std::uint64_t> seed;
};

struct ExperimentResult {
  bool passed = false;
  std::string summary;
  std::filesystem::path output;
  std::vector<std::string> files;
};

namespace detail {

struct Setup {
  GridPtr grid;
  ProblemSpec problem;
};

inline Setup build_setup(const ExperimentConfig& c) {
  Setup s;
  s.grid = build_grid(Domain(c.axes), std::span<const std::size_t>(c.nodes));
  s.problem.m = c.m;
  s.problem.lambda = c.lambda;
  s.problem.f = c.f.sample(s.grid);
  s.problem.g = c.g.sample(s.grid);
  s.problem.u0 = c.u0.sample(s.grid);
  return s;
}

class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }
  void write(const std::string& name, const csv::Table& t) {
    t.write(dir_ / name);
    files_.push_back(name);
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw Error("cannot write " + (dir_ / name).string());
    os << text;
    files_.push_back(name);
  }
  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::num(v[i]);
  return s;
}

inline void add_key_values(Report& r, const std::string& text) {
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) r.add(line.substr(0, eq), line.substr(eq + 1));
  }
}

inline std::string format_point(const Point& x, int dim) {
  return dim == 1 ? csv::num(x[0]) : csv::num(x[0]) + ";" + csv::num(x[1]);
}

inline Report header_report(const ExperimentConfig& c) {
  Report r;
  r.section = "experiment";
  r.add("name", c.name);
  r.add("kind", c.kind);
  std::string nodes;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) nodes += (i ? "x" : "") + std::to_string(c.nodes[i]);
  r.add("grid", nodes);
  r.add("m", c.m);
  r.add("lambda", c.lambda);
  r.add("boundary", to_string(c.boundary));
  r.add("f", c.f.type);
  r.add("g", c.g.type);
  r.add("u0", c.u0.type);
  r.add("seed", std::to_string(c.seed));
  return r;
}

inline void run_evolve(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  Report tol{"tolerances"};
  tol.add("divergence_cap", 1e6);
  tol.add("cfl_safety", 0.5);
  reports.push_back(tol);
  Report r{"evolve"};
  EvolveOptions eo;
  eo.sample_every = c.sample_every;
  try {
    const Trajectory tr = evolve(s.problem, c.T, c.boundary, eo);
    out.write("trajectory.csv", trajectory_table(tr));
    out.write("probe.csv", probe_table(tr));
    r.add("T", c.T);
    r.add("samples", csv::num(tr.samples()));
    r.add("steps", csv::num(tr.steps));
    r.add("final_probe", tr.probe.back());
    r.add("final_max_abs", tr.final_field().max_abs());
    r.add("final_increment_rate", tr.increment_rate.back());
  } catch (const DivergenceError& e) {
    r.add("diverged_at", e.time());
    r.require(false, e.what());
  }
  reports.push_back(r);
}

inline void run_stationary(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  Report tol{"tolerances"};
  tol.add("tol", c.tol);
  tol.add("t_max", c.t_max);
  tol.add("sustain", 50.0);
  reports.push_back(tol);
  SteadyOptions so;
  so.tol = c.tol;
  so.t_max = c.t_max;
  const SteadyResult res = solve_stationary(s.problem, c.boundary, so);
  out.write("solution.csv", steady_table(res, s.problem, c.boundary));
  Report r{"stationary"};
  r.add("record", steady_summary(res));
  r.add("status", to_string(res.status));
  r.add("max_residual", res.max_residual);
  r.add("drift", res.drift);
  r.require(res.status != SteadyStatus::Diverged, "solver diverged");
  if (c.expect_converged) {
    r.require(res.converged == *c.expect_converged,
              std::string("expected ") + (*c.expect_converged ? "convergence" : "no steady state"));
  }
  if (c.boundary == BoundaryKind::RelaxedDirichlet) {
    const LossReport loss = boundary_loss(res.solution, s.problem.g, 2.0 * std::sqrt(s.grid->min_spacing()));
    r.add_bool("boundary_loss", loss.any());
    r.add("max_boundary_deficit", loss.max_deficit);
    bool capped = true;
    for (std::size_t k : s.grid->boundary()) capped = capped && res.solution[k] <= s.problem.g[k] + 1e-12;
    r.require(capped, "trace exceeds boundary data");
  }
  reports.push_back(r);
}

inline VanishingDiscountOptions vd_options(const ExperimentConfig& c) {
  VanishingDiscountOptions o;
  o.lambdas = c.lambdas;
  o.tol = c.ergodic_tol;
  o.richardson = c.richardson;
  return o;
}

inline void run_ergodic(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  Report tol{"tolerances"};
  tol.add("cauchy_tol", c.ergodic_tol);
  tol.add("probe_margin", c.probe_margin);
  reports.push_back(tol);
  const ErgodicPair pair = vanishing_discount(s.problem, vd_options(c));
  out.write("ladder.csv", ladder_table(pair));
  out.write("u_infinity.csv", field_table(pair.u_infinity, "u_infinity"));
  Report r{"ergodic"};
  r.add("c", pair.c);
  r.add_bool("converged", pair.converged);
  r.add_bool("non_cauchy", pair.non_cauchy);
  r.add("lambda_last", pair.lambdas.back());
  r.add("x_star", format_point(s.grid->point(pair.x_star), s.grid->dimension()));
  r.require(pair.converged, "lambda ladder is not Cauchy within tol");
  if (c.m > 2.0 && s.grid->domain().delta0() / s.grid->min_spacing() >= 8.0) {
    const ExponentFit hf = holder_fit(pair.u_infinity);
    const ExponentFit bf = blowup_fit(pair.u_infinity);
    detail::add_key_values(r, to_key_values(hf, "holder") + to_key_values(bf, "blowup"));
    r.add("alpha", holder_exponent(c.m));
    out.write("holder_fit.csv", fit_table(hf));
    out.write("blowup_fit.csv", fit_table(bf));
  }
  reports.push_back(r);
  if (c.characterize) {
    CharacterizationMargins mg;
    mg.subsolution = 10.0 * c.ergodic_tol;
    mg.probe = c.probe_margin;
    const CharacterizationReport cr = check_characterization(pair, s.problem, mg);
    Report q{"characterization"};
    q.add("max_subsolution_excess", cr.max_subsolution_excess);
    q.add("probe_drift", cr.probe_drift);
    q.add_bool("probe_settled", cr.probe_settled);
    q.require(cr.subsolution_ok, "u_infinity is not a subsolution at level c within the margin");
    q.require(cr.drift_detected, "no drift below c");
    reports.push_back(q);
  }
}

inline void run_trichotomy(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  Report tol{"tolerances"};
  tol.add("tau_c", c.tau_c);
  tol.add("profile_tol", c.profile_tol);
  tol.add("oscillation_tol", c.oscillation_tol);
  tol.add("cauchy_tol", c.ergodic_tol);
  reports.push_back(tol);
  const ErgodicPair base = vanishing_discount(s.problem, vd_options(c));
  Report b{"base"};
  b.add("c0", base.c);
  b.add_bool("converged", base.converged);
  b.require(base.converged, "base lambda ladder is not Cauchy");
  reports.push_back(b);
  out.write("base_ladder.csv", ladder_table(base));

  TrichotomyOptions to;
  to.tau_c = c.tau_c;
  to.profile_tol = c.profile_tol;
  to.oscillation_tol = c.oscillation_tol;
  csv::Table regimes({"target_c", "shift", "c", "slope_c", "regime", "profile_distance", "tail_oscillation", "offset"});
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const double target = c.targets[i];
    // f + s has ergodic constant c0 − s.
    const double shift = base.c - target;
    ProblemSpec q = s.problem;
    q.lambda = 0.0;
    for (std::size_t k = 0; k < q.f.size(); ++k) q.f[k] += shift;
    ErgodicPair pair = base;
    pair.c = base.c - shift;
    for (double& v : pair.c_series) v -= shift;
    Report r{"target_" + csv::num(target)};
    EvolveOptions eo;
    eo.sample_every = c.sample_every;
    eo.keep_fields = false;
    try {
      const Trajectory tr = evolve(q, c.T, BoundaryKind::RelaxedDirichlet, eo);
      const TrichotomyReport rep = classify_trichotomy(pair, tr, q, to);
      r.add("shift", shift);
      add_key_values(r, to_key_values(rep));
      const Regime expected = target < -c.tau_c ? Regime::NegativeC : target > c.tau_c ? Regime::PositiveC : Regime::ZeroC;
      r.inconclusive = rep.regime == Regime::Inconclusive;
      r.require(rep.regime == expected, std::string("expected ") + to_string(expected));
      regimes.add({csv::num(target), csv::num(shift), csv::num(rep.c), csv::num(rep.drift), to_string(rep.regime),
                   csv::num(rep.profile_distance), csv::num(rep.tail_oscillation), csv::num(rep.offset)});
      out.write("probe_target_" + std::to_string(i) + ".csv", probe_table(tr));
    } catch (const DivergenceError& e) {
      r.inconclusive = true;
      r.require(false, e.what());
    }
    reports.push_back(r);
  }
  out.write("regimes.csv", regimes);
}

inline void run_threshold(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  const double R = c.axes[0].hi;
  const double cstar = critical_C(R, c.m);
  Report tol{"tolerances"};
  tol.add("t_max", c.t_max);
  tol.add("steady_tol", 1e-6);
  if (c.epsilon_tol) tol.add("epsilon_tol", *c.epsilon_tol);
  reports.push_back(tol);
  Report r{"threshold1d"};
  r.add("R", R);
  r.add("integral_I", integral_I(c.m));
  r.add("critical_C", cstar);
  r.add("sharp_critical_C", sharp_critical_C(R, c.m));
  SteadyOptions so;
  so.t_max = c.t_max;
  std::vector<double> factors = c.c_factors;
  std::sort(factors.begin(), factors.end());
  std::vector<ThresholdRow> rows;
  for (double fct : factors) rows.push_back(threshold_point(fct * cstar, R, c.m, c.nodes[0], so));
  out.write("threshold.csv", threshold_table(rows));
  bool closed = true, contained = true, necessary = true, seen_fail = false;
  for (const auto& row : rows) {
    if (!row.fd_converged) seen_fail = true;
    else if (seen_fail) closed = false;
    if (row.fd_converged && !row.oracle_exists) contained = false;
    if (row.C > cstar && row.oracle_exists) necessary = false;
  }
  r.add_bool("fd_downward_closed", closed);
  r.add_bool("fd_within_oracle", contained);
  r.require(closed, "FD solvable set is not downward closed");
  r.require(contained, "FD solvable where the oracle finds no solution");
  r.require(necessary, "oracle solvable above critical_C");
  if (c.epsilon_tol) {
    const EpsilonStarResult es = epsilon_star(s.problem.f, R, c.m, *c.epsilon_tol);
    if (es.infinite) {
      r.add("epsilon_star", "inf");
    } else {
      r.add("epsilon_star", es.value);
      r.add("epsilon_star_bracket", csv::num(es.lo) + ":" + csv::num(es.hi));
    }
  }
  reports.push_back(r);
}

inline void run_montecarlo(const ExperimentConfig& c, Setup& s, Artifacts& out, std::vector<Report>& reports) {
  Report tol{"tolerances"};
  tol.add("slack", c.mc_slack);
  tol.add("stderr_multiple", 3.0);
  tol.add("dt", c.mc_dt);
  tol.add("paths", csv::num(c.paths));
  reports.push_back(tol);
  EvolveOptions eo;
  eo.sample_every = c.sample_every > 0.0 ? c.sample_every : c.T / 200.0;
  const Trajectory tr = evolve(s.problem, c.T, c.boundary, eo);
  out.write("fd_final.csv", field_table(tr.final_field(), "u"));
  csv::Table summary({"probe", "x", "y", "mc_mean", "mc_stderr", "fd_value", "exit_fraction", "pass"});
  for (std::size_t i = 0; i < c.probes.size(); ++i) {
    const Point& x = c.probes[i];
    const ControlRun run = mc_value(s.problem, tr, x, c.T, c.paths, c.mc_dt, c.seed);
    const double fd = interpolate(tr.final_field(), x);
    const bool ok = std::abs(run.mean - fd) <= 3.0 * run.std_error + c.mc_slack;
    Report r{"probe_" + std::to_string(i)};
    r.add("x", format_point(x, s.grid->dimension()));
    r.add("mc_mean", run.mean);
    r.add("mc_stderr", run.std_error);
    r.add("fd_value", fd);
    r.add("exit_fraction", run.exit_fraction);
    r.add("capped_paths", csv::num(run.capped_paths));
    r.require(ok, "|mc - fd| exceeds 3*stderr + slack");
    reports.push_back(r);
    out.write("paths_probe_" + std::to_string(i) + ".csv", path_table(run));
    summary.add({csv::num(i), csv::num(x[0]), csv::num(x[1]), csv::num(run.mean), csv::num(run.std_error),
                 csv::num(fd), csv::num(run.exit_fraction), ok ? "1" : "0"});
  }
  out.write("montecarlo.csv", summary);
}

}  // namespace detail

/// Runs one configured experiment, writes CSV artifacts and summary.txt into
/// the output directory, and reports whether its internal assertions passed.
inline ExperimentResult run_experiment(ExperimentConfig c, const RunOverrides& ov = {}) {
  if (!(ov.grid_scale > 0.0)) throw ConfigError("--grid-scale", "must be > 0");
  if (ov.seed) c.seed = *ov.seed;
  if (ov.output) c.output = *ov.output;
  for (auto& n : c.nodes) {
    n = static_cast<std::size_t>(std::llround(static_cast<double>(n - 1) * ov.grid_scale)) + 1;
    if (n < 3) throw ConfigError("--grid-scale", "scaled grid has no interior node");
  }
  detail::Setup s = detail::build_setup(c);
  const bool evolves = c.kind == "evolve" || c.kind == "trichotomy" || c.kind == "montecarlo" || c.kind == "stationary";
  if (evolves && c.boundary == BoundaryKind::RelaxedDirichlet) {
    // Compatibility u0 = g on ∂Ω, checked before any compute.
    for (std::size_t k : s.grid->boundary()) {
      if (std::abs(s.problem.u0[k] - s.problem.g[k]) > 1e-9 * (1.0 + std::abs(s.problem.g[k]))) {
        const Point x = s.grid->point(k);
        throw ConfigError("config.u0", "incompatible with config.g at boundary node (" + csv::num(x[0]) +
                                           (c.axes.size() == 2 ? ", " + csv::num(x[1]) : "") + ")");
      }
    }
  }
  detail::Artifacts out(c.output);
  std::vector<Report> reports{detail::header_report(c)};
  if (c.kind == "evolve") detail::run_evolve(c, s, out, reports);
  else if (c.kind == "stationary") detail::run_stationary(c, s, out, reports);
  else if (c.kind == "ergodic") detail::run_ergodic(c, s, out, reports);
  else if (c.kind == "trichotomy") detail::run_trichotomy(c, s, out, reports);
  else if (c.kind == "threshold1d") detail::run_threshold(c, s, out, reports);
  else if (c.kind == "montecarlo") detail::run_montecarlo(c, s, out, reports);

  ExperimentResult res;
  res.summary = emit_summary(reports);
  out.write_text("summary.txt", res.summary);
  res.passed = res.summary.rfind("status=PASS", 0) == 0;
  res.output = out.dir();
  res.files = out.files();
  return res;
}

}  // namespace vhj

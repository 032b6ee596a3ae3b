#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vhj {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when an interior band Ω_δ contains no grid node.
class EmptyBand : public Error {
 public:
  using Error::Error;
};

using Point = std::array<double, 2>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

/// An interval (dimension 1) or an axis-aligned rectangle (dimension 2).
class Domain {
 public:
  static Domain interval(double lo, double hi) { return Domain({Interval{lo, hi}}); }
  static Domain rectangle(Interval x, Interval y) { return Domain({x, y}); }

  explicit Domain(std::vector<Interval> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) {
      throw InvalidArgument("domain dimension must be 1 or 2");
    }
    for (const auto& a : axes_) {
      if (!(a.length() > 0.0) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
        throw InvalidArgument("domain axis must have strictly positive finite length");
      }
    }
  }

  int dimension() const { return static_cast<int>(axes_.size()); }
  const Interval& axis(int a) const { return axes_.at(static_cast<std::size_t>(a)); }

  double min_length() const {
    double l = std::numeric_limits<double>::infinity();
    for (const auto& a : axes_) l = std::min(l, a.length());
    return l;
  }

  /// Width of the boundary collar used by barriers and fits.
  double delta0() const { return 0.25 * min_length(); }

  /// Euclidean distance to the boundary of the box (exact on convex boxes).
  double distance(const Point& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dimension(); ++a) {
      d = std::min({d, x[a] - axes_[a].lo, axes_[a].hi - x[a]});
    }
    return std::max(d, 0.0);
  }

 private:
  std::vector<Interval> axes_;
};

/// Uniform tensor grid on a Domain. Node k has multi-index (i, j) with
/// k = i + nx * j; in 1D j is always 0.
class Grid {
 public:
  Grid(Domain domain, std::span<const std::size_t> nodes_per_axis) : domain_(std::move(domain)) {
    const int dim = domain_.dimension();
    if (static_cast<int>(nodes_per_axis.size()) != dim) {
      throw InvalidArgument("nodes_per_axis must have one entry per axis");
    }
    for (int a = 0; a < dim; ++a) {
      if (nodes_per_axis[a] < 3) throw InvalidArgument("no interior node: nodes_per_axis must be >= 3");
      n_[a] = nodes_per_axis[a];
      h_[a] = domain_.axis(a).length() / static_cast<double>(n_[a] - 1);
    }
    stride_ = {1, n_[0]};
    size_ = n_[0] * n_[1];
    boundary_flag_.assign(size_, 0);
    for (std::size_t k = 0; k < size_; ++k) {
      const auto [i, j] = multi_index(k);
      bool b = (i == 0 || i == n_[0] - 1);
      if (dim == 2) b = b || j == 0 || j == n_[1] - 1;
      boundary_flag_[k] = b ? 1 : 0;
      (b ? boundary_ : interior_).push_back(k);
    }
  }

  const Domain& domain() const { return domain_; }
  int dimension() const { return domain_.dimension(); }
  std::size_t size() const { return size_; }
  std::size_t nodes(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double min_spacing() const { return dimension() == 1 ? h_[0] : std::min(h_[0], h_[1]); }
  std::size_t stride(int axis) const { return stride_[axis]; }

  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + n_[0] * j; }
  std::array<std::size_t, 2> multi_index(std::size_t k) const { return {k % n_[0], k / n_[0]}; }

  double coord(std::size_t k, int axis) const {
    const auto ij = multi_index(k);
    if (ij[axis] == n_[axis] - 1) return domain_.axis(axis).hi;
    return domain_.axis(axis).lo + static_cast<double>(ij[axis]) * h_[axis];
  }
  Point point(std::size_t k) const {
    Point p{0.0, 0.0};
    for (int a = 0; a < dimension(); ++a) p[a] = coord(k, a);
    return p;
  }

  bool is_boundary(std::size_t k) const { return boundary_flag_[k] != 0; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary() const { return boundary_; }

  /// True when node k sits on an extreme index of the given axis.
  bool on_face(std::size_t k, int axis) const {
    const auto ij = multi_index(k);
    return ij[axis] == 0 || ij[axis] == n_[axis] - 1;
  }

  /// Neighbor one step inward from boundary node k (diagonal at corners).
  std::size_t inward_neighbor(std::size_t k) const {
    auto ij = multi_index(k);
    for (int a = 0; a < dimension(); ++a) {
      if (ij[a] == 0) ij[a] = 1;
      else if (ij[a] == n_[a] - 1) ij[a] = n_[a] - 2;
    }
    return index(ij[0], ij[1]);
  }

  /// Spacing along the inward direction of boundary node k.
  double inward_spacing(std::size_t k) const {
    double h = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dimension(); ++a) {
      if (on_face(k, a)) h = std::min(h, h_[a]);
    }
    return h;
  }

  /// Grid node nearest the domain center (ties broken toward lower index).
  std::size_t center_node() const {
    std::array<std::size_t, 2> ij{0, 0};
    for (int a = 0; a < dimension(); ++a) {
      const double t = (domain_.axis(a).center() - domain_.axis(a).lo) / h_[a];
      ij[a] = static_cast<std::size_t>(std::floor(t + 0.5 - 1e-12));
    }
    return index(ij[0], ij[1]);
  }

  /// Nearest node to an arbitrary point (clamped to the grid).
  std::size_t nearest_node(const Point& x) const {
    std::array<std::size_t, 2> ij{0, 0};
    for (int a = 0; a < dimension(); ++a) {
      const double t = (x[a] - domain_.axis(a).lo) / h_[a];
      const double r = std::clamp(std::round(t), 0.0, static_cast<double>(n_[a] - 1));
      ij[a] = static_cast<std::size_t>(r);
    }
    return index(ij[0], ij[1]);
  }

 private:
  Domain domain_;
  std::array<std::size_t, 2> n_{1, 1};
  std::array<double, 2> h_{0.0, 0.0};
  std::array<std::size_t, 2> stride_{1, 1};
  std::size_t size_ = 0;
  std::vector<unsigned char> boundary_flag_;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(const Domain& domain, std::span<const std::size_t> nodes_per_axis) {
  return std::make_shared<const Grid>(domain, nodes_per_axis);
}

inline GridPtr build_grid(const Domain& domain, std::initializer_list<std::size_t> nodes_per_axis) {
  const std::vector<std::size_t> n(nodes_per_axis);
  return build_grid(domain, std::span<const std::size_t>(n));
}

/// Real values sampled on every node of a grid.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid, double fill = 0.0) : grid_(std::move(grid)) {
    values_.assign(grid_->size(), fill);
  }
  Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw InvalidArgument("field value count must equal node count");
  }

  template <class Fn>
  static Field from_function(GridPtr grid, Fn&& fn) {
    Field out(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) out.values_[k] = fn(grid->point(k));
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }
  double max_abs() const {
    double r = 0.0;
    for (double v : values_) r = std::max(r, std::abs(v));
    return r;
  }
  double sup() const { return *std::max_element(values_.begin(), values_.end()); }
  double inf() const { return *std::min_element(values_.begin(), values_.end()); }

  Field& operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline Field operator+(Field a, double s) { return a += s; }
inline Field operator-(Field a, double s) { return a += -s; }

/// sup over nodes of (a - b)^+.
inline double sup_positive_part(const Field& a, const Field& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, a[k] - b[k]);
  return r;
}

inline double sup_distance(const Field& a, const Field& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, std::abs(a[k] - b[k]));
  return r;
}

/// Distance to ∂Ω at every node; zero exactly on boundary nodes.
inline Field distance_field(const GridPtr& grid) {
  Field d(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    d[k] = grid->is_boundary(k) ? 0.0 : grid->domain().distance(grid->point(k));
  }
  return d;
}

/// Nodes of Ω_δ = {d > δ}. Throws EmptyBand when no node qualifies.
inline std::vector<std::size_t> interior_band(const GridPtr& grid, double delta) {
  if (!(delta > 0.0) || !(delta < 0.5 * grid->domain().min_length())) {
    if (delta > 0.0) throw EmptyBand("interior band is empty: delta >= half the smallest axis length");
    throw InvalidArgument("interior band requires delta > 0");
  }
  const Field d = distance_field(grid);
  std::vector<std::size_t> out;
  // Relative slack keeps nodes at exactly d == delta (up to rounding) out of the band.
  const double cut = delta * (1.0 + 1e-12);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    if (d[k] > cut) out.push_back(k);
  }
  if (out.empty()) throw EmptyBand("interior band is empty for delta = " + std::to_string(delta));
  return out;
}

}  // namespace vhj

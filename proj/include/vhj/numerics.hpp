#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vhj/domain.hpp"

namespace vhj {

/// Evaluates s ↦ s^m for s ≥ 0, with exact-multiplication fast paths for the
/// exponents that dominate the test matrix (2, 2.5, 3, 4).
class PowerLaw {
 public:
  PowerLaw() = default;
  explicit PowerLaw(double m) : m_(m) {
    if (m == 2.0) kind_ = Kind::Two;
    else if (m == 2.5) kind_ = Kind::TwoHalf;
    else if (m == 3.0) kind_ = Kind::Three;
    else if (m == 4.0) kind_ = Kind::Four;
    else kind_ = Kind::General;
  }

  double exponent() const { return m_; }

  double operator()(double s) const {
    switch (kind_) {
      case Kind::Two: return s * s;
      case Kind::TwoHalf: return s * s * std::sqrt(s);
      case Kind::Three: return s * s * s;
      case Kind::Four: { const double q = s * s; return q * q; }
      case Kind::General: break;
    }
    return s > 0.0 ? std::pow(s, m_) : 0.0;
  }

  /// d/ds s^m = m s^{m-1}.
  double derivative(double s) const {
    switch (kind_) {
      case Kind::Two: return 2.0 * s;
      case Kind::TwoHalf: return 2.5 * s * std::sqrt(s);
      case Kind::Three: return 3.0 * s * s;
      case Kind::Four: return 4.0 * s * s * s;
      case Kind::General: break;
    }
    return s > 0.0 ? m_ * std::pow(s, m_ - 1.0) : 0.0;
  }

 private:
  enum class Kind { Two, TwoHalf, Three, Four, General };
  double m_ = 2.0;
  Kind kind_ = Kind::Two;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t samples = 0;
};

/// Ordinary least squares y ≈ slope·x + intercept.
inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("least squares needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("least squares abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.samples = x.size();
  return f;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace vhj

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace momsand::quadrature {

/// Integral value with an absolute error estimate.
struct Integral {
  double value = 0.0;
  double abs_error = 0.0;
};

inline constexpr double kRelTolerance = 1e-13;

using Integrand = std::function<double(double)>;

/// Double-exponential quadrature on a finite interval. Handles algebraic
/// endpoint singularities such as y^q near 0, so callers split at kinks.
inline Integral finite(const Integrand& f, double a, double b) {
  if (!(b > a)) return {};
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double err = 0.0;
  double l1 = 0.0;
  const double v = integrator.integrate([&](double x) { return f(x); }, a, b, kRelTolerance,
                                        &err, &l1);
  return {v, std::max(err, 4.0 * std::numeric_limits<double>::epsilon() * l1)};
}

/// Half-infinite interval, (a, +inf) when to_plus_infinity, else (-inf, a).
inline Integral half_infinite(const Integrand& f, double a, bool to_plus_infinity) {
  static thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
  double err = 0.0;
  double l1 = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double v = to_plus_infinity
                       ? integrator.integrate([&](double x) { return f(x); }, a, inf,
                                              kRelTolerance, &err, &l1)
                       : integrator.integrate([&](double x) { return f(x); }, -inf, a,
                                              kRelTolerance, &err, &l1);
  return {v, std::max(err, 4.0 * std::numeric_limits<double>::epsilon() * l1)};
}

/// Sorted, deduplicated breakpoints restricted to the open interval (lo, hi).
inline std::vector<double> interior_points(std::span<const double> points, double lo, double hi) {
  std::vector<double> out;
  for (double x : points)
    if (std::isfinite(x) && x > lo && x < hi) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Integral over [lo, hi] (either end may be infinite), split at breakpoints.
inline Integral piecewise(const Integrand& f, double lo, double hi,
                          std::span<const double> breakpoints) {
  std::vector<double> cuts = interior_points(breakpoints, lo, hi);
  if (std::isinf(lo) && std::isinf(hi) && cuts.empty()) cuts.push_back(0.0);
  std::vector<double> nodes;
  nodes.reserve(cuts.size() + 2);
  nodes.push_back(lo);
  nodes.insert(nodes.end(), cuts.begin(), cuts.end());
  nodes.push_back(hi);
  Integral total;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i];
    const double b = nodes[i + 1];
    Integral part;
    if (std::isinf(a))
      part = half_infinite(f, b, false);
    else if (std::isinf(b))
      part = half_infinite(f, a, true);
    else
      part = finite(f, a, b);
    total.value += part.value;
    total.abs_error += part.abs_error;
  }
  return total;
}

}  // namespace momsand::quadrature

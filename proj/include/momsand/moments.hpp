#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "momsand/distribution.hpp"
#include "momsand/error.hpp"
#include "momsand/parallel.hpp"
#include "momsand/quadrature.hpp"

namespace momsand {

enum class MomentMethod { ClosedForm, Quadrature, MonteCarlo, FiniteSum };

constexpr std::string_view to_string(MomentMethod m) noexcept {
  switch (m) {
    case MomentMethod::ClosedForm: return "ClosedForm";
    case MomentMethod::Quadrature: return "Quadrature";
    case MomentMethod::MonteCarlo: return "MonteCarlo";
    case MomentMethod::FiniteSum: return "FiniteSum";
  }
  return "Unknown";
}

/// E|X|^q with its provenance.
struct MomentEstimate {
  double q = 0.0;
  double value = 0.0;
  double abs_error = 0.0;
  MomentMethod method = MomentMethod::ClosedForm;
};

/// E f(|X|) with an absolute error bound. Deterministic methods only.
struct Expectation {
  double value = 0.0;
  double abs_error = 0.0;
  MomentMethod method = MomentMethod::FiniteSum;
};

namespace detail {
constexpr double kUlpError = 8.0 * std::numeric_limits<double>::epsilon();
}

/// E f(|X|) for any listed family. `breakpoints` are points in |X|-space
/// where f has kinks or jumps (indicator edges); quadrature splits there.
inline Expectation expect_abs(const DistributionSpec& spec, const std::function<double(double)>& f,
                              std::span<const double> breakpoints = {}) {
  using quadrature::piecewise;
  const double inf = std::numeric_limits<double>::infinity();
  if (auto at = atoms(spec)) {
    CompensatedSum sum;
    double mag = 0.0;
    for (const auto& a : *at) {
      const double term = a.prob * f(std::abs(a.value));
      sum.add(term);
      mag += std::abs(term);
    }
    return {sum.value(), detail::kUlpError * mag, MomentMethod::FiniteSum};
  }
  return std::visit(
      [&](const auto& fam) -> Expectation {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          const double w = fam.hi - fam.lo;
          quadrature::Integral total;
          auto add = [&](double y0, double y1) {
            auto part = piecewise(f, y0, y1, breakpoints);
            total.value += part.value;
            total.abs_error += part.abs_error;
          };
          if (fam.lo >= 0.0) {
            add(fam.lo, fam.hi);
          } else if (fam.hi <= 0.0) {
            add(-fam.hi, -fam.lo);
          } else {
            add(0.0, -fam.lo);
            add(0.0, fam.hi);
          }
          return {total.value / w, total.abs_error / w, MomentMethod::Quadrature};
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          std::vector<double> zs;
          for (double b : breakpoints)
            if (b > 0.0) zs.push_back((std::log(b) - fam.mu) / fam.sigma);
          const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
          auto g = [&](double z) {
            const double dens = norm * std::exp(-0.5 * z * z);
            if (dens == 0.0) return 0.0;
            return f(std::exp(fam.mu + fam.sigma * z)) * dens;
          };
          auto r = piecewise(g, -inf, inf, zs);
          return {r.value, r.abs_error, MomentMethod::Quadrature};
        } else if constexpr (std::is_same_v<T, Exponential>) {
          auto g = [&](double y) {
            const double dens = fam.rate * std::exp(-fam.rate * y);
            if (dens == 0.0) return 0.0;
            return f(y) * dens;
          };
          std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
          cuts.push_back(1.0 / fam.rate);
          auto r = piecewise(g, 0.0, inf, cuts);
          return {r.value, r.abs_error, MomentMethod::Quadrature};
        } else if constexpr (std::is_same_v<T, RieszFactor>) {
          // E f(1 + cos U) = (1/pi) int_0^pi f(2 cos^2(t/2)) dt; the half-angle
          // form keeps full relative precision near the zero at t = pi.
          std::vector<double> ts;
          for (double b : breakpoints)
            if (b > 0.0 && b < 2.0) ts.push_back(2.0 * std::acos(std::sqrt(0.5 * b)));
          auto g = [&](double t) {
            const double c = std::cos(0.5 * t);
            return f(2.0 * c * c);
          };
          auto r = piecewise(g, 0.0, std::numbers::pi, ts);
          return {r.value / std::numbers::pi, r.abs_error / std::numbers::pi,
                  MomentMethod::Quadrature};
        } else if constexpr (std::is_same_v<T, ScaledCopy>) {
          const double s = fam.scale;
          std::vector<double> bs;
          for (double b : breakpoints) bs.push_back(b / s);
          return expect_abs(*fam.base, [&](double y) { return f(s * y); }, bs);
        } else {
          return {};  // finite families handled above
        }
      },
      spec.family);
}

/// E|X|^q. Finite sums for finite support, closed forms for uniform,
/// lognormal and exponential, quadrature for the Riesz factor.
inline MomentEstimate abs_moment(const DistributionSpec& spec, double q) {
  require(std::isfinite(q) && q > 0.0, ErrorCode::InvalidOrder, "moment order must be > 0");
  validate(spec);
  auto power = [q](double y) { return y > 0.0 ? std::pow(y, q) : 0.0; };

  if (is_finite_support(spec)) {
    auto e = expect_abs(spec, power);
    return {q, e.value, e.abs_error, MomentMethod::FiniteSum};
  }
  return std::visit(
      [&](const auto& fam) -> MomentEstimate {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          const double q1 = q + 1.0;
          const double lo = fam.lo;
          const double hi = fam.hi;
          double v = 0.0;
          if (lo >= 0.0)
            v = (std::pow(hi, q1) - std::pow(lo, q1)) / (q1 * (hi - lo));
          else if (hi <= 0.0)
            v = (std::pow(-lo, q1) - std::pow(-hi, q1)) / (q1 * (hi - lo));
          else
            v = (std::pow(-lo, q1) + std::pow(hi, q1)) / (q1 * (hi - lo));
          return {q, v, detail::kUlpError * v, MomentMethod::ClosedForm};
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          const double v = std::exp(q * fam.mu + 0.5 * q * q * fam.sigma * fam.sigma);
          require(std::isfinite(v), ErrorCode::NonfiniteMoment, "lognormal moment overflows");
          return {q, v, detail::kUlpError * v, MomentMethod::ClosedForm};
        } else if constexpr (std::is_same_v<T, Exponential>) {
          const double v = std::exp(std::lgamma(q + 1.0) - q * std::log(fam.rate));
          require(std::isfinite(v), ErrorCode::NonfiniteMoment, "exponential moment overflows");
          return {q, v, detail::kUlpError * v, MomentMethod::ClosedForm};
        } else if constexpr (std::is_same_v<T, RieszFactor>) {
          auto e = expect_abs(spec, power, std::span<const double>{});
          return {q, e.value, e.abs_error, MomentMethod::Quadrature};
        } else if constexpr (std::is_same_v<T, ScaledCopy>) {
          auto base = abs_moment(*fam.base, q);
          const double f = std::pow(fam.scale, q);
          return {q, base.value * f, base.abs_error * f, base.method};
        } else {
          return {};
        }
      },
      spec.family);
}

/// Result of normalizing a law to unit p-th absolute moment.
struct Normalized {
  DistributionSpec spec;
  double scale = 1.0;
};

/// ScaledCopy with E|sX|^p = 1, s = (E|X|^p)^(-1/p).
inline Normalized normalize_unit_p_moment(const DistributionSpec& spec, double p) {
  const auto m = abs_moment(spec, p);
  require(m.value > 0.0, ErrorCode::DegenerateZero, "X = 0 almost surely");
  const double s = std::pow(m.value, -1.0 / p);
  return {scaled(spec, s), s};
}

/// |X| declared degenerate when (E|X|^{p/2})^2 >= (1 - 1e-9) E|X|^p, the
/// equality case of Cauchy-Schwarz.
inline bool modulus_degenerate(const DistributionSpec& spec, double p) {
  const double half = abs_moment(spec, 0.5 * p).value;
  const double full = abs_moment(spec, p).value;
  return half * half >= (1.0 - 1e-9) * full;
}

}  // namespace momsand

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "momsand/error.hpp"

namespace momsand {

enum class NormKind { L1, L2, Sup };

constexpr std::string_view to_string(NormKind k) noexcept {
  switch (k) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::Sup: return "sup";
  }
  return "l2";
}

inline NormKind parse_norm(std::string_view s) {
  if (s == "l1") return NormKind::L1;
  if (s == "l2") return NormKind::L2;
  if (s == "sup" || s == "linf") return NormKind::Sup;
  throw Error(ErrorCode::ParseError, "unknown norm '" + std::string(s) + "'");
}

inline double norm(std::span<const double> x, NormKind kind) noexcept {
  if (x.size() == 1) return std::abs(x[0]);
  double acc = 0.0;
  switch (kind) {
    case NormKind::L1:
      for (double v : x) acc += std::abs(v);
      return acc;
    case NormKind::L2:
      for (double v : x) acc += v * v;
      return std::sqrt(acc);
    case NormKind::Sup:
      for (double v : x) acc = std::max(acc, std::abs(v));
      return acc;
  }
  return acc;
}

/// |x|^p with 0^p = 0 for p > 0.
inline double pow_abs(double x, double p) noexcept {
  const double a = std::abs(x);
  if (a == 0.0) return 0.0;
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

}  // namespace momsand

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "momsand/assumptions.hpp"
#include "momsand/error.hpp"

namespace momsand {

enum class Regime { SmallP, LargeP };

constexpr std::string_view to_string(Regime r) noexcept {
  return r == Regime::SmallP ? "SmallP" : "LargeP";
}

inline Regime regime_for(double p) { return p <= 1.0 ? Regime::SmallP : Regime::LargeP; }

/// One step of a constant's derivation.
struct TraceEntry {
  std::string formula;
  std::vector<std::pair<std::string, double>> inputs;
  double value = 0.0;
  std::string note;
};

/// Lower and upper constants of the two-sided moment bound, with derivation.
struct ConstantBundle {
  double p = 0.0;
  Regime regime = Regime::SmallP;
  double lower_c = 0.0;
  double log_lower_c = 0.0;
  bool lower_c_underflow = false;  // lower_c below the smallest normal double, reported as 0
  double upper_C = 1.0;
  double recursive_C = 1.0;
  double product_C = 1.0;
  std::uint64_t k = 1;
  double c0 = 0.0;      // LargeP only; may be +inf when it overflows
  double log_c0 = 0.0;  // LargeP only
  double eps0 = 0.0;
  double eps1 = 0.0;
  double a_param = 0.0;
  double q = 0.0;  // LargeP only
  std::vector<TraceEntry> trace;
};

inline constexpr std::uint64_t kDefaultKCap = 1'000'000'000;

/// Outcome of the integer search for k: the smallest k >= 1 with
/// ln k + slope * k + offset <= log_rhs.
struct KSearch {
  std::uint64_t k = 1;
  double log_rhs = 0.0;
  double log_lhs = 0.0;       // at k
  double log_lhs_prev = 0.0;  // at k - 1 (NaN when k = 1)
};

/// ln k + slope*k + offset is concave in k with its maximum at -1/slope, so
/// below the maximum it exceeds its value at k = 1 and above the maximum it is
/// decreasing; the minimal solution is found by bisection on the decreasing part.
inline KSearch minimal_k(double slope, double offset, double log_rhs,
                         std::uint64_t cap = kDefaultKCap) {
  require(slope < 0.0, ErrorCode::InvalidArgument, "k search needs lambda < 1");
  auto f = [&](std::uint64_t k) {
    return std::log(static_cast<double>(k)) + slope * static_cast<double>(k) + offset;
  };
  KSearch out;
  out.log_rhs = log_rhs;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (f(1) <= log_rhs) {
    out.k = 1;
    out.log_lhs = f(1);
    out.log_lhs_prev = nan;
    return out;
  }
  const double peak = -1.0 / slope;
  if (peak >= static_cast<double>(cap) || f(cap) > log_rhs)
    throw Error(ErrorCode::KTooLarge,
                "k exceeds " + std::to_string(cap) + " (lambda too close to 1)");
  std::uint64_t lo = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(peak)));
  std::uint64_t hi = cap;  // f(hi) <= log_rhs
  if (f(lo) <= log_rhs) {
    hi = lo;
  } else {
    while (hi - lo > 1) {  // invariant: f(lo) > rhs >= f(hi)
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (f(mid) <= log_rhs)
        hi = mid;
      else
        lo = mid;
    }
  }
  out.k = hi;
  out.log_lhs = f(hi);
  out.log_lhs_prev = hi > 1 ? f(hi - 1) : nan;
  return out;
}

namespace detail {

inline void set_lower(ConstantBundle& b, double log_c) {
  b.log_lower_c = log_c;
  if (log_c < std::log(std::numeric_limits<double>::min())) {
    b.lower_c = 0.0;
    b.lower_c_underflow = true;
  } else {
    b.lower_c = std::exp(log_c);
  }
}

inline void trace_k(ConstantBundle& b, const KSearch& ks, std::string formula) {
  b.trace.push_back({std::move(formula),
                     {{"log_rhs", ks.log_rhs}, {"log_lhs_k", ks.log_lhs},
                      {"log_lhs_k_minus_1", ks.log_lhs_prev}},
                     static_cast<double>(ks.k),
                     ks.k > 1 ? "minimal: k satisfies, k-1 violates" : "k = 1 satisfies"});
}

}  // namespace detail

/// c = delta^3 / (16 k), k minimal with k lambda^{2k-2} <= delta^3 (1-lambda)^2 / (2^12 A).
/// Upper constant 1.
inline ConstantBundle lower_constant_small_p(const SmallPCertificate& cert,
                                             std::uint64_t k_cap = kDefaultKCap) {
  const double lam = cert.lambda;
  const double delta = cert.delta;
  const double a = cert.a_param;
  require(lam > 0.0 && lam < 1.0 && delta > 0.0 && a > 1.0, ErrorCode::InvalidArgument,
          "small-p certificate needs 0 < lambda < 1, delta > 0, A > 1");
  ConstantBundle b;
  b.p = cert.p;
  b.regime = Regime::SmallP;
  b.a_param = a;
  const double log_rhs = 3.0 * std::log(delta) + 2.0 * std::log1p(-lam) -
                         12.0 * std::numbers::ln2 - std::log(a);
  b.trace.push_back({"rhs = delta^3 (1-lambda)^2 / (2^12 A)",
                     {{"lambda", lam}, {"delta", delta}, {"A", a}},
                     std::exp(log_rhs),
                     "log value " + std::to_string(log_rhs)});
  const double log_lam = std::log(lam);
  const KSearch ks = minimal_k(2.0 * log_lam, -2.0 * log_lam, log_rhs, k_cap);
  b.k = ks.k;
  detail::trace_k(b, ks, "k: min k with ln k + (2k-2) ln lambda <= ln rhs");
  detail::set_lower(b, 3.0 * std::log(delta) - std::log(16.0) - std::log(static_cast<double>(b.k)));
  b.trace.push_back({"lower_c = delta^3 / (16 k)",
                     {{"delta", delta}, {"k", static_cast<double>(b.k)}},
                     b.lower_c,
                     ""});
  b.upper_C = b.recursive_C = b.product_C = 1.0;
  b.trace.push_back({"upper_C = 1", {{"p", cert.p}}, 1.0, "subadditivity of t^p for p <= 1"});
  b.eps0 = delta / 8.0;
  b.eps1 = delta * delta * delta / 8.0;
  b.trace.push_back({"eps0 = delta / 8", {{"delta", delta}}, b.eps0, ""});
  b.trace.push_back({"eps1 = delta^3 / 8", {{"delta", delta}}, b.eps1, ""});
  return b;
}

struct UpperConstants {
  double recursive_C = 1.0;
  double product_C = 1.0;
};

namespace detail {
inline double recursive_upper(double p, std::span<const double> chain) {
  if (p <= 1.0) return 1.0;
  const double r = std::pow(chain.front(), p - 1.0);
  return std::pow(2.0, p) * (1.0 + recursive_upper(p - 1.0, chain.subspan(1)) * r / (1.0 - r));
}
}  // namespace detail

/// Upper constants for p > 0 from the moment-ratio chain lambda_1..lambda_{ceil(p)-1}.
/// Recursive form C(p) = 2^p (1 + C(p-1) l^{p-1} / (1 - l^{p-1})), where level p uses
/// lambda_1 and C(p-1) consumes the chain shifted by one. Product form
/// 2^{p(p+1)/2} prod_j 1 / (1 - lambda_j^{p-j}). Both equal 1 for p <= 1.
inline UpperConstants upper_constant_large_p(double p, std::span<const double> lambda_chain) {
  require(p > 0.0, ErrorCode::InvalidArgument, "p must be positive");
  require(lambda_chain.size() == chain_length(p), ErrorCode::ChainLengthMismatch,
          "chain must have ceil(p) - 1 = " + std::to_string(chain_length(p)) + " entries");
  for (double l : lambda_chain)
    require(l > 0.0 && l < 1.0, ErrorCode::InvalidArgument, "chain entries must lie in (0, 1)");
  UpperConstants u;
  if (p <= 1.0) return u;
  double log_product = 0.5 * p * (p + 1.0) * std::numbers::ln2;
  for (std::size_t j = 1; j <= lambda_chain.size(); ++j)
    log_product -= std::log1p(-std::pow(lambda_chain[j - 1], p - static_cast<double>(j)));
  u.product_C = std::exp(log_product);
  u.recursive_C = detail::recursive_upper(p, lambda_chain);
  if (!(u.recursive_C <= u.product_C * (1.0 + 1e-12)))
    throw std::logic_error("recursive upper constant exceeds product form");
  return u;
}

/// ln C0 = (1-p) ln(1-lambda) + p ln(2A / (3 lambda)) + (p/q) ln(2p / ((q+1-p) ln 2))
///         + 2p^2 / min(p-1, 1) * ln 48.
inline double log_c0(double p, double lambda, double a, double q) {
  return (1.0 - p) * std::log1p(-lambda) + p * std::log(2.0 * a / (3.0 * lambda)) +
         (p / q) * std::log(2.0 * p / ((q + 1.0 - p) * std::numbers::ln2)) +
         2.0 * p * p / std::min(p - 1.0, 1.0) * std::log(48.0);
}

/// c = mu^{3p} / (8 k 2^{10p} 3^p), k minimal with
/// k lambda^{pk} <= (1-lambda) mu^{3p} / (8 C0 2^{10p} 3^p). Upper constants from the chain.
inline ConstantBundle lower_constant_large_p(const LargePCertificate& cert,
                                             std::uint64_t k_cap = kDefaultKCap) {
  const double p = cert.p;
  const double lam = cert.lambda;
  const double mu = cert.mu;
  const double a = cert.a_param;
  const double q = cert.q;
  require(p > 1.0, ErrorCode::InvalidArgument, "large-p constants need p > 1");
  require(lam > 0.0 && lam < 1.0 && mu > 0.0 && a > 0.0 && q > std::max(p - 1.0, 1.0),
          ErrorCode::InvalidArgument, "invalid large-p certificate");
  ConstantBundle b;
  b.p = p;
  b.regime = Regime::LargeP;
  b.a_param = a;
  b.q = q;
  b.log_c0 = log_c0(p, lam, a, q);
  b.c0 = std::exp(b.log_c0);
  b.trace.push_back({"C0 = (1-lambda)^{1-p} (2A/(3 lambda))^p (2p/((q+1-p) ln 2))^{p/q} "
                     "48^{2p^2/min(p-1,1)}",
                     {{"p", p}, {"lambda", lam}, {"A", a}, {"q", q}},
                     b.c0,
                     "log value " + std::to_string(b.log_c0)});
  const double log_scale = 3.0 * p * std::log(mu) - std::log(8.0) -
                           10.0 * p * std::numbers::ln2 - p * std::log(3.0);
  const double log_rhs = std::log1p(-lam) + log_scale - b.log_c0;
  b.trace.push_back({"rhs = (1-lambda) mu^{3p} / (8 C0 2^{10p} 3^p)",
                     {{"mu", mu}, {"lambda", lam}, {"log_C0", b.log_c0}},
                     std::exp(log_rhs),
                     "log value " + std::to_string(log_rhs)});
  const KSearch ks = minimal_k(p * std::log(lam), 0.0, log_rhs, k_cap);
  b.k = ks.k;
  detail::trace_k(b, ks, "k: min k with ln k + p k ln lambda <= ln rhs");
  detail::set_lower(b, log_scale - std::log(static_cast<double>(b.k)));
  b.trace.push_back({"lower_c = mu^{3p} / (8 k 2^{10p} 3^p)",
                     {{"mu", mu}, {"k", static_cast<double>(b.k)}, {"p", p}},
                     b.lower_c,
                     b.lower_c_underflow ? "underflow: log value " + std::to_string(b.log_lower_c)
                                         : ""});
  b.eps0 = std::min(1.0 / (4.0 * std::pow(3.0, p)), std::pow(mu, p) / (8.0 * std::pow(24.0, p)));
  b.eps1 = std::min(std::pow(mu / 8.0, p),
                    std::pow(mu, 2.0 * p) / (std::pow(2.0, p - 1.0) * std::pow(64.0, p))) *
           b.eps0;
  b.trace.push_back({"eps0 = min(1/(4 3^p), mu^p/(8 24^p))", {{"mu", mu}, {"p", p}}, b.eps0, ""});
  b.trace.push_back({"eps1 = min(mu^p/8^p, mu^{2p}/(2^{p-1} 64^p)) eps0",
                     {{"mu", mu}, {"p", p}},
                     b.eps1,
                     ""});
  const auto up = upper_constant_large_p(p, cert.lambda_chain);
  b.recursive_C = up.recursive_C;
  b.product_C = up.product_C;
  b.upper_C = std::min(up.recursive_C, up.product_C);
  std::vector<std::pair<std::string, double>> chain_inputs{{"p", p}};
  for (std::size_t j = 0; j < cert.lambda_chain.size(); ++j)
    chain_inputs.emplace_back("lambda_" + std::to_string(j + 1), cert.lambda_chain[j]);
  b.trace.push_back({"recursive_C = 2^p (1 + C(p-1) l1^{p-1} / (1 - l1^{p-1}))", chain_inputs,
                     b.recursive_C, "C(p-1) uses the chain shifted by one (lambda_2, ...)"});
  b.trace.push_back({"product_C = 2^{p(p+1)/2} prod 1/(1 - lambda_j^{p-j})", chain_inputs,
                     b.product_C, ""});
  b.trace.push_back({"upper_C = min(recursive_C, product_C)", {}, b.upper_C, ""});
  return b;
}

// ---------------------------------------------------------------------------
// Parameter scans

struct SmallPResult {
  SmallPCertificate certificate;
  ConstantBundle bundle;
};

struct LargePResult {
  LargePCertificate certificate;
  ConstantBundle bundle;
};

/// Maximizes lower_c over the A grid. Ties keep the earlier grid entry.
inline SmallPResult optimize_small_p(const DistributionSpec& spec, double p,
                                     const std::vector<double>& a_grid) {
  std::vector<TraceEntry> scan;
  std::optional<SmallPResult> best;
  std::optional<Error> last_error;
  for (const auto& cert : fit_small_p_scan(spec, p, a_grid)) {
    try {
      auto bundle = lower_constant_small_p(cert);
      scan.push_back({"scan A",
                      {{"A", cert.a_param}, {"delta", cert.delta}, {"k", static_cast<double>(bundle.k)}},
                      bundle.lower_c,
                      ""});
      if (!best || bundle.log_lower_c > best->bundle.log_lower_c)
        best = SmallPResult{cert, std::move(bundle)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::KTooLarge) throw;
      scan.push_back({"scan A", {{"A", cert.a_param}, {"delta", cert.delta}}, 0.0, e.what()});
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  best->bundle.trace.insert(best->bundle.trace.end(), scan.begin(), scan.end());
  return *best;
}

/// Joint scan over (A, q); A values failing the tail condition and q values
/// outside (max(p-1, 1), p) are skipped. Ties keep the earlier pair.
inline LargePResult optimize_large_p(const DistributionSpec& spec, double p,
                                     const std::vector<double>& a_grid,
                                     const std::vector<double>& q_grid) {
  const double q_lo = std::max(p - 1.0, 1.0);
  std::vector<double> qs;
  for (double q : q_grid)
    if (q > q_lo && q < p) qs.push_back(q);
  require(!qs.empty(), ErrorCode::NoValidQ, "no q in (max(p-1,1), p) on the grid");
  std::vector<TraceEntry> scan;
  std::optional<LargePResult> best;
  std::optional<Error> last_error;
  for (double a : a_grid) {
    for (double q : qs) {
      try {
        auto cert = fit_large_p_at(spec, p, a, q);
        auto bundle = lower_constant_large_p(cert);
        scan.push_back({"scan (A, q)",
                        {{"A", a}, {"q", q}, {"lambda", cert.lambda}, {"k", static_cast<double>(bundle.k)}},
                        bundle.lower_c,
                        "log value " + std::to_string(bundle.log_lower_c)});
        if (!best || bundle.log_lower_c > best->bundle.log_lower_c)
          best = LargePResult{std::move(cert), std::move(bundle)};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoValidA && e.code() != ErrorCode::KTooLarge) throw;
        last_error = e;
        if (e.code() == ErrorCode::NoValidA) break;  // same A fails for every q
      }
    }
  }
  if (!best) throw *last_error;
  best->bundle.trace.insert(best->bundle.trace.end(), scan.begin(), scan.end());
  return *best;
}

// ---------------------------------------------------------------------------
// End-to-end certification

struct Certification {
  DistributionSpec normalized;
  double scale = 1.0;
  std::variant<SmallPCertificate, LargePCertificate> certificate;
  ConstantBundle bundle;
};

/// Normalizes to E|X|^p = 1, fits the regime's hypotheses and optimizes the
/// free parameters over the grids.
inline Certification certify(const DistributionSpec& spec, double p,
                             const std::vector<double>& a_grid, const std::vector<double>& q_grid) {
  require(std::isfinite(p) && p > 0.0, ErrorCode::InvalidArgument, "p must be positive");
  auto norm = normalize_unit_p_moment(spec, p);
  if (has_degenerate_modulus(norm.spec) || modulus_degenerate(norm.spec, p))
    throw Error(ErrorCode::DegenerateModulus, "|X| is degenerate; no lower constant exists");
  if (p <= 1.0) {
    auto r = optimize_small_p(norm.spec, p, a_grid);
    return {norm.spec, norm.scale, r.certificate, std::move(r.bundle)};
  }
  auto r = optimize_large_p(norm.spec, p, a_grid, q_grid);
  return {norm.spec, norm.scale, std::move(r.certificate), std::move(r.bundle)};
}

inline Certification certify(const DistributionSpec& spec, double p) {
  return certify(spec, p, p <= 1.0 ? default_small_p_a_grid() : default_large_p_a_grid(),
                 default_q_grid(p));
}

}  // namespace momsand

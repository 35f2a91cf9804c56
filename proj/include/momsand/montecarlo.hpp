#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "momsand/constants.hpp"
#include "momsand/distribution.hpp"
#include "momsand/error.hpp"
#include "momsand/moments.hpp"
#include "momsand/norms.hpp"
#include "momsand/parallel.hpp"
#include "momsand/random.hpp"

namespace momsand {

/// Vectors v_0..v_n in R^dim and the norm used on R^dim.
struct CoefficientSet {
  std::size_t dim = 1;
  std::vector<std::vector<double>> vectors;
  NormKind norm = NormKind::L2;

  [[nodiscard]] std::size_t n() const { return vectors.empty() ? 0 : vectors.size() - 1; }
  friend bool operator==(const CoefficientSet&, const CoefficientSet&) = default;
};

inline void validate(const CoefficientSet& c) {
  require(c.dim >= 1, ErrorCode::InvalidArgument, "coefficient dimension must be >= 1");
  require(!c.vectors.empty(), ErrorCode::InvalidArgument, "need at least v_0");
  for (const auto& v : c.vectors) {
    require(v.size() == c.dim, ErrorCode::InvalidArgument, "coefficient vectors must share dimension");
    for (double x : v) require(std::isfinite(x), ErrorCode::InvalidArgument, "nonfinite coefficient");
  }
}

inline CoefficientSet scalar_coefficients(const std::vector<double>& values) {
  CoefficientSet c;
  for (double v : values) c.vectors.push_back({v});
  return c;
}

/// count vectors with entries uniform on (-scale, scale), drawn from stream 0 of seed.
inline CoefficientSet random_coefficients(std::size_t count, std::size_t dim, double scale,
                                          std::uint64_t seed, NormKind kind = NormKind::L2) {
  require(count >= 1 && dim >= 1, ErrorCode::InvalidArgument, "need count >= 1 and dim >= 1");
  Rng rng({seed, 0});
  CoefficientSet c;
  c.dim = dim;
  c.norm = kind;
  c.vectors.assign(count, std::vector<double>(dim));
  for (auto& v : c.vectors)
    for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return c;
}

struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  bool exact = false;
};

inline EstimateWithCI exact_value(double v) { return {v, 0.0, 0, 0, true}; }

/// Mean and standard error from stored samples, summed pairwise in index order.
inline EstimateWithCI summarize(std::span<const double> values, std::uint64_t seed) {
  const auto n = static_cast<double>(values.size());
  EstimateWithCI e;
  e.replications = values.size();
  e.seed = seed;
  e.mean = pairwise_sum(values) / n;
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - e.mean) * (values[i] - e.mean);
  const double var = values.size() > 1 ? pairwise_sum(dev) / (n - 1.0) : 0.0;
  e.std_error = std::sqrt(var / n);
  return e;
}

// ---------------------------------------------------------------------------
// Exact enumeration over finite-support laws

inline constexpr double kMaxEnumeration = 1e7;
inline constexpr double kParallelEnumeration = 1e5;

/// s^n as a double, saturating.
inline double outcome_count(std::size_t support, std::size_t n) {
  return std::pow(static_cast<double>(support), static_cast<double>(n));
}

namespace detail {

/// Depth-first walk over X_{level}..X_n in lexicographic order. sums[i] holds
/// sum_{j<=i} v_j R_j. A zero product absorbs the rest of the path, so the
/// whole subtree is reported as one outcome with its total weight.
template <class Visit>
void enumerate_from(const std::vector<Atom>& at, const CoefficientSet& c, std::size_t level,
                    double r, double w, std::vector<std::vector<double>>& sums, Visit& visit) {
  const std::size_t n = c.n();
  if (level > n || r == 0.0) {
    visit(w, std::span<const double>(sums[level - 1]));
    return;
  }
  const auto& v = c.vectors[level];
  for (const auto& a : at) {
    const double rr = r * a.value;
    for (std::size_t j = 0; j < c.dim; ++j) sums[level][j] = sums[level - 1][j] + v[j] * rr;
    enumerate_from(at, c, level + 1, rr, w * a.prob, sums, visit);
  }
}

inline std::vector<Atom> enumerable_atoms(const DistributionSpec& spec, const CoefficientSet& c) {
  auto at = atoms(spec);
  require(at.has_value(), ErrorCode::InvalidArgument, "exact enumeration needs a finite-support law");
  require(outcome_count(at->size(), c.n()) <= kMaxEnumeration, ErrorCode::TooLarge,
          "support^n exceeds 1e7 outcomes");
  return std::move(*at);
}

}  // namespace detail

/// Calls visit(weight, S) for every outcome of (X_1..X_n), S = sum v_i R_i,
/// in lexicographic order of atom indices.
template <class Visit>
void enumerate_outcomes(const DistributionSpec& spec, const CoefficientSet& c, Visit&& visit) {
  validate(c);
  const auto at = detail::enumerable_atoms(spec, c);
  std::vector<std::vector<double>> sums(c.n() + 1, std::vector<double>(c.dim));
  sums[0] = c.vectors[0];
  detail::enumerate_from(at, c, 1, 1.0, 1.0, sums, visit);
}

/// E||sum v_i R_i||^p by enumerating all s^n outcomes. Large enumerations are
/// split by the value of X_1 and the branch totals added in branch order.
inline EstimateWithCI brute_force_lhs(const DistributionSpec& spec, const CoefficientSet& c, double p,
                                      unsigned threads = default_threads()) {
  validate(c);
  require(p > 0.0, ErrorCode::InvalidOrder, "p must be positive");
  if (c.n() == 0) return exact_value(pow_abs(norm(c.vectors[0], c.norm), p));
  const auto at = detail::enumerable_atoms(spec, c);
  const bool split = outcome_count(at.size(), c.n()) > kParallelEnumeration;
  std::vector<double> branch(at.size());
  auto run_branch = [&](std::size_t b) {
    std::vector<std::vector<double>> sums(c.n() + 1, std::vector<double>(c.dim));
    sums[0] = c.vectors[0];
    const double r = at[b].value;
    for (std::size_t j = 0; j < c.dim; ++j) sums[1][j] = sums[0][j] + c.vectors[1][j] * r;
    CompensatedSum acc;
    auto visit = [&](double w, std::span<const double> s) { acc.add(w * pow_abs(norm(s, c.norm), p)); };
    detail::enumerate_from(at, c, 2, r, at[b].prob, sums, visit);
    branch[b] = acc.value();
  };
  parallel_for(at.size(), split ? threads : 1u, run_branch);
  CompensatedSum total;
  for (double x : branch) total.add(x);
  return exact_value(total.value());
}

/// sum_i ||v_i||^p (E|X|^p)^i.
inline double rhs_sum(const DistributionSpec& spec, const CoefficientSet& c, double p) {
  validate(c);
  const double m = abs_moment(spec, p).value;
  CompensatedSum acc;
  for (std::size_t i = 0; i < c.vectors.size(); ++i) {
    const double nv = pow_abs(norm(c.vectors[i], c.norm), p);
    if (nv != 0.0) acc.add(nv * std::pow(m, static_cast<double>(i)));
  }
  return acc.value();
}

// ---------------------------------------------------------------------------
// Monte Carlo

inline constexpr std::uint64_t kMinReplications = 1000;

/// Replication r draws its path from stream r of src.seed, so the estimate
/// does not depend on the worker count. When samples is non-null the raw
/// per-replication values are stored there.
inline EstimateWithCI estimate_lhs(const DistributionSpec& spec, const CoefficientSet& c, double p,
                                   std::uint64_t reps, RandomSource src,
                                   std::vector<double>* samples = nullptr,
                                   unsigned threads = default_threads()) {
  validate(c);
  require(p > 0.0, ErrorCode::InvalidOrder, "p must be positive");
  if (c.n() == 0) {
    auto e = exact_value(pow_abs(norm(c.vectors[0], c.norm), p));
    e.seed = src.seed;
    return e;
  }
  require(reps >= kMinReplications, ErrorCode::InvalidArgument, "need at least 1000 replications");
  const Sampler sampler(spec);
  std::vector<double> values(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    Rng rng(src.with_stream(r));
    double s1[1];
    std::vector<double> buf(c.dim > 1 ? c.dim : 0);
    std::span<double> s = c.dim > 1 ? std::span<double>(buf) : std::span<double>(s1);
    for (std::size_t j = 0; j < c.dim; ++j) s[j] = c.vectors[0][j];
    double prod = 1.0;
    for (std::size_t i = 1; i <= c.n() && prod != 0.0; ++i) {
      prod *= sampler(rng);
      const auto& v = c.vectors[i];
      for (std::size_t j = 0; j < c.dim; ++j) s[j] += v[j] * prod;
    }
    values[r] = pow_abs(norm(s, c.norm), p);
  });
  auto e = summarize(values, src.seed);
  if (samples) *samples = std::move(values);
  return e;
}

// ---------------------------------------------------------------------------
// Sandwich verdicts

enum class Verdict { Pass, Fail, Inconclusive };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

inline constexpr double kRelativeTolerance = 1e-9;

/// PASS when the 3-sigma interval lies in [lo - tol, hi + tol], FAIL when it
/// lies entirely outside.
inline Verdict judge(const EstimateWithCI& e, double lo, double hi, double tol) {
  const double a = e.mean - 3.0 * e.std_error;
  const double b = e.mean + 3.0 * e.std_error;
  if (a >= lo - tol && b <= hi + tol) return Verdict::Pass;
  if (b < lo - tol || a > hi + tol) return Verdict::Fail;
  return Verdict::Inconclusive;
}

struct SandwichReport {
  EstimateWithCI lhs;
  double rhs_sum = 0.0;
  ConstantBundle bundle;
  double lower = 0.0;  // lower_c * rhs_sum
  double upper = 0.0;  // upper_C * rhs_sum
  Verdict verdict = Verdict::Inconclusive;
  double ratio = 0.0;  // lhs / rhs_sum, NaN when rhs_sum = 0
};

inline SandwichReport make_sandwich_report(const EstimateWithCI& lhs, double rhs,
                                           const ConstantBundle& bundle) {
  SandwichReport r;
  r.lhs = lhs;
  r.rhs_sum = rhs;
  r.bundle = bundle;
  r.lower = bundle.lower_c * rhs;
  r.upper = bundle.upper_C * rhs;
  r.verdict = judge(lhs, r.lower, r.upper, kRelativeTolerance * rhs);
  r.ratio = rhs > 0.0 ? lhs.mean / rhs : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// Uses exact enumeration when the law has finite support and at most 1e7
/// outcomes, Monte Carlo otherwise.
inline SandwichReport run_sandwich(const DistributionSpec& spec, double p, const CoefficientSet& c,
                                   const ConstantBundle& bundle, std::uint64_t reps, RandomSource src,
                                   unsigned threads = default_threads()) {
  require(regime_for(p) == bundle.regime && p == bundle.p, ErrorCode::RegimeMismatch,
          "constant bundle was computed for p = " + std::to_string(bundle.p));
  validate(c);
  const auto at = atoms(spec);
  const bool exact = at && outcome_count(at->size(), c.n()) <= kMaxEnumeration;
  const auto lhs = exact ? brute_force_lhs(spec, c, p, threads)
                         : estimate_lhs(spec, c, p, reps, src, nullptr, threads);
  return make_sandwich_report(lhs, rhs_sum(spec, c, p), bundle);
}

// ---------------------------------------------------------------------------
// Tail bounds

/// P(||S||^p >= level) over the enumerated law.
inline double tail_probability(const DistributionSpec& spec, const CoefficientSet& c, double p,
                               double level) {
  CompensatedSum acc;
  enumerate_outcomes(spec, c, [&](double w, std::span<const double> s) {
    if (pow_abs(norm(s, c.norm), p) >= level) acc.add(w);
  });
  return acc.value();
}

/// sum_i lambda^i ||v_i||^p.
inline double geometric_weight(const CoefficientSet& c, double p, double lambda) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < c.vectors.size(); ++i)
    acc.add(std::pow(lambda, static_cast<double>(i)) * pow_abs(norm(c.vectors[i], c.norm), p));
  return acc.value();
}

struct TailCheck {
  double t = 0.0;
  double probability = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// P(||S||^p >= t sum lambda^i ||v_i||^p) <= (1-lambda)^{(1-p)q/p} t^{-q/p}
/// for a law with E|X|^p = 1, q > 1 and ||X||_q <= lambda.
inline TailCheck large_p_tail_check(const DistributionSpec& spec, const CoefficientSet& c, double p,
                                    double q, double lambda, double t) {
  TailCheck r;
  r.t = t;
  r.probability = tail_probability(spec, c, p, t * geometric_weight(c, p, lambda));
  r.bound = std::pow(1.0 - lambda, (1.0 - p) * q / p) * std::pow(t, -q / p);
  r.holds = r.probability <= r.bound + 1e-12;
  return r;
}

/// P(||S||^p >= t/(1-lambda) sum lambda^i ||v_i||^p) <= t^{-1/2} for a law
/// with E|X|^p = 1 and E|X|^{p/2} <= lambda.
inline TailCheck small_p_tail_check(const DistributionSpec& spec, const CoefficientSet& c, double p,
                                    double lambda, double t) {
  TailCheck r;
  r.t = t;
  r.probability = tail_probability(spec, c, p, t / (1.0 - lambda) * geometric_weight(c, p, lambda));
  r.bound = 1.0 / std::sqrt(t);
  r.holds = r.probability <= r.bound + 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Degenerate modulus

struct KhintchineReport {
  std::size_t n = 0;
  double p = 0.0;
  EstimateWithCI estimate;          // E|R_1 + ... + R_n|^p, X = +-1
  std::optional<double> exact;      // enumeration or moment identity when available
  double rhs_sum = 0.0;             // n
  double ratio = 0.0;               // estimate / n
};

/// Exact E|sum of n independent signs|^p for p = 2 and p = 4.
inline std::optional<double> sign_sum_moment(std::size_t n, double p) {
  const auto m = static_cast<double>(n);
  if (p == 2.0) return m;
  if (p == 4.0) return 3.0 * m * m - 2.0 * m;
  return std::nullopt;
}

/// With X = +-1 every |R_i| = 1, so the right side equals n while the left
/// side grows like n^{p/2}.
inline KhintchineReport khintchine_counterexample(std::size_t n, double p, std::uint64_t reps,
                                                  RandomSource src, unsigned threads = default_threads()) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  std::vector<double> ones(n + 1, 1.0);
  ones[0] = 0.0;
  const auto c = scalar_coefficients(ones);
  const DistributionSpec x = RademacherSign{};
  KhintchineReport r;
  r.n = n;
  r.p = p;
  r.estimate = estimate_lhs(x, c, p, reps, src, nullptr, threads);
  r.exact = sign_sum_moment(n, p);
  if (!r.exact && outcome_count(2, n) <= kMaxEnumeration) r.exact = brute_force_lhs(x, c, p, threads).mean;
  r.rhs_sum = static_cast<double>(n);
  r.ratio = r.estimate.mean / r.rhs_sum;
  return r;
}

}  // namespace momsand

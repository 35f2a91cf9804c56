#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "momsand/assumptions.hpp"
#include "momsand/constants.hpp"
#include "momsand/montecarlo.hpp"

namespace momsand {

/// One joint outcome of (X, B).
struct PairAtom {
  double x = 0.0;
  std::vector<double> b;
  double prob = 0.0;
};

/// Joint atoms of (X, B) when X and every B component have finite support.
/// Independent coupling: product of the marginals, X slowest.
inline std::optional<std::vector<PairAtom>> pair_atoms(const PairSpec& pair) {
  validate(pair);
  const auto xs = atoms(pair.x_spec);
  if (!xs) return std::nullopt;
  std::vector<PairAtom> out;
  if (pair.coupling == Coupling::ComonotoneScalar) {
    for (const auto& a : *xs) {
      PairAtom pa{a.value, std::vector<double>(pair.dim()), a.prob};
      const double g = pair.map.power == 1.0 ? a.value : std::pow(a.value, pair.map.power);
      for (std::size_t j = 0; j < pair.dim(); ++j) pa.b[j] = pair.map.intercept[j] + pair.map.slope[j] * g;
      out.push_back(std::move(pa));
    }
    return out;
  }
  std::vector<std::vector<Atom>> comps;
  for (const auto& b : pair.b_components) {
    auto at = atoms(b);
    if (!at) return std::nullopt;
    comps.push_back(std::move(*at));
  }
  std::vector<PairAtom> bs{{0.0, {}, 1.0}};
  for (const auto& comp : comps) {
    std::vector<PairAtom> next;
    for (const auto& partial : bs)
      for (const auto& a : comp) {
        PairAtom pa = partial;
        pa.b.push_back(a.value);
        pa.prob *= a.prob;
        next.push_back(std::move(pa));
      }
    bs = std::move(next);
  }
  for (const auto& a : *xs)
    for (const auto& b : bs) out.push_back({a.value, b.b, a.prob * b.prob});
  return out;
}

inline constexpr std::uint64_t kBMomentSamples = 1'000'000;

/// E||B||^p. Scalar and comonotone cases are exact up to quadrature; several
/// independent components are enumerated when finite, else sampled from stream 0 of src.
inline Expectation b_moment(const PairSpec& pair, double p, RandomSource src = {}) {
  validate(pair);
  require(p > 0.0, ErrorCode::InvalidOrder, "p must be positive");
  if (pair.coupling == Coupling::ComonotoneScalar) {
    const auto& m = pair.map;
    std::vector<double> cuts;
    for (std::size_t j = 0; j < pair.dim(); ++j)
      if (m.slope[j] != 0.0 && -m.intercept[j] / m.slope[j] > 0.0)
        cuts.push_back(std::pow(-m.intercept[j] / m.slope[j], 1.0 / m.power));
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> b(pair.dim());
    const std::function<double(double)> f = [&](double x) {
      const double g = m.power == 1.0 ? x : std::pow(x, m.power);
      for (std::size_t j = 0; j < b.size(); ++j) b[j] = m.intercept[j] + m.slope[j] * g;
      return pow_abs(norm(b, pair.norm), p);
    };
    return expect_abs(pair.x_spec, f, cuts);
  }
  if (pair.dim() == 1) {
    const auto m = abs_moment(pair.b_components[0], p);
    return {m.value, m.abs_error, m.method};
  }
  bool finite = true;
  double count = 1.0;
  for (const auto& b : pair.b_components) {
    const auto at = atoms(b);
    if (!at) {
      finite = false;
      break;
    }
    count *= static_cast<double>(at->size());
  }
  if (finite && count <= kMaxEnumeration) {
    PairSpec only_b = pair;
    only_b.x_spec = FinitelySupported{{{1.0, 1.0}}};
    const auto joint = *pair_atoms(only_b);
    CompensatedSum acc;
    for (const auto& a : joint) acc.add(a.prob * pow_abs(norm(a.b, pair.norm), p));
    return {acc.value(), 0.0, MomentMethod::FiniteSum};
  }
  std::vector<Sampler> samplers;
  for (const auto& b : pair.b_components) samplers.emplace_back(b);
  std::vector<double> values(kBMomentSamples);
  parallel_for(kBMomentSamples, default_threads(), [&](std::size_t r) {
    Rng rng(src.with_stream(r));
    std::vector<double> b(samplers.size());
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = samplers[j](rng);
    values[r] = pow_abs(norm(b, pair.norm), p);
  });
  const auto e = summarize(values, src.seed);
  return {e.mean, 3.0 * e.std_error, MomentMethod::MonteCarlo};
}

/// E||S_n||^p, S_n = sum_{i=1}^n R_{i-1} B_i, by Monte Carlo. Replication r
/// uses stream r; (X_i, B_i) are drawn together.
inline EstimateWithCI perpetuity_lhs(const PairSpec& pair, std::size_t n, double p, std::uint64_t reps,
                                     RandomSource src, std::vector<double>* samples = nullptr,
                                     unsigned threads = default_threads()) {
  validate(pair);
  require(p > 0.0, ErrorCode::InvalidOrder, "p must be positive");
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(reps >= kMinReplications, ErrorCode::InvalidArgument, "need at least 1000 replications");
  const PairSampler sampler(pair);
  const std::size_t d = pair.dim();
  std::vector<double> values(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    Rng rng(src.with_stream(r));
    std::vector<double> s(d, 0.0), b(d);
    double prod = 1.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double x = sampler(rng, b);
      for (std::size_t j = 0; j < d; ++j) s[j] += prod * b[j];
      prod *= x;
    }
    values[r] = pow_abs(norm(s, pair.norm), p);
  });
  auto e = summarize(values, src.seed);
  if (samples) *samples = std::move(values);
  return e;
}

namespace detail {
inline void perpetuity_walk(const std::vector<PairAtom>& at, std::size_t n, std::size_t level, double r,
                            double w, std::vector<std::vector<double>>& sums, NormKind kind, double p,
                            CompensatedSum& acc) {
  if (level > n) {
    acc.add(w * pow_abs(norm(sums[level - 1], kind), p));
    return;
  }
  for (const auto& a : at) {
    for (std::size_t j = 0; j < a.b.size(); ++j) sums[level][j] = sums[level - 1][j] + r * a.b[j];
    perpetuity_walk(at, n, level + 1, r * a.x, w * a.prob, sums, kind, p, acc);
  }
}
}  // namespace detail

/// Number of joint outcomes of (X_1, B_1), ..., (X_n, B_n), or NaN when some law is continuous.
inline double perpetuity_outcomes(const PairSpec& pair, std::size_t n) {
  const auto at = pair_atoms(pair);
  if (!at) return std::numeric_limits<double>::quiet_NaN();
  return outcome_count(at->size(), n);
}

/// Exact E||S_n||^p by enumerating every joint outcome in lexicographic order.
inline EstimateWithCI perpetuity_brute_force(const PairSpec& pair, std::size_t n, double p) {
  require(p > 0.0, ErrorCode::InvalidOrder, "p must be positive");
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  const auto at = pair_atoms(pair);
  require(at.has_value(), ErrorCode::InvalidArgument, "exact enumeration needs finite supports");
  require(outcome_count(at->size(), n) <= kMaxEnumeration, ErrorCode::TooLarge,
          "joint support^n exceeds 1e7 outcomes");
  std::vector<std::vector<double>> sums(n + 1, std::vector<double>(pair.dim(), 0.0));
  CompensatedSum acc;
  detail::perpetuity_walk(*at, n, 1, 1.0, 1.0, sums, pair.norm, p, acc);
  return exact_value(acc.value());
}

// ---------------------------------------------------------------------------
// Bracket for (1/n) E||S_n||^p

inline constexpr double kExactBracketOutcomes = 1e5;

struct BracketRow {
  std::size_t n = 0;
  EstimateWithCI per_n;  // (1/n) E||S_n||^p
  double lower = 0.0;    // lower_c E||B||^p
  double upper = 0.0;    // upper_C E||B||^p
  bool lower_certified = true;
  Verdict verdict = Verdict::Inconclusive;
};

struct GoldieBracket {
  double p = 0.0;
  Expectation b_moment;
  ConstantBundle bundle;
  std::vector<BracketRow> rows;
};

/// Needs E X^p = 1. Independent coupling: both ends come from the X-only
/// constants. Comonotone coupling: only the upper end is certified and the
/// verdict ignores the lower end.
inline GoldieBracket goldie_bracket(const PairSpec& pair, double p, const std::vector<std::size_t>& n_list,
                                    const ConstantBundle& bundle, std::uint64_t reps, RandomSource src,
                                    unsigned threads = default_threads()) {
  validate(pair);
  require(regime_for(p) == bundle.regime && p == bundle.p, ErrorCode::RegimeMismatch,
          "constant bundle was computed for p = " + std::to_string(bundle.p));
  const double mx = abs_moment(pair.x_spec, p).value;
  require(std::abs(mx - 1.0) <= 1e-9, ErrorCode::NotNormalized, "need E X^p = 1");
  GoldieBracket out;
  out.p = p;
  out.bundle = bundle;
  out.b_moment = b_moment(pair, p, src);
  const double eb = out.b_moment.value;
  const bool independent = pair.coupling == Coupling::Independent;
  for (std::size_t n : n_list) {
    BracketRow row;
    row.n = n;
    const double count = perpetuity_outcomes(pair, n);
    const auto e = count <= kExactBracketOutcomes ? perpetuity_brute_force(pair, n, p)
                                                  : perpetuity_lhs(pair, n, p, reps, src, nullptr, threads);
    const auto nn = static_cast<double>(n);
    row.per_n = e;
    row.per_n.mean = e.mean / nn;
    row.per_n.std_error = e.std_error / nn;
    row.lower = bundle.lower_c * eb;
    row.upper = bundle.upper_C * eb;
    row.lower_certified = independent;
    const double tol = kRelativeTolerance * eb + out.b_moment.abs_error * bundle.upper_C;
    row.verdict = judge(row.per_n, independent ? row.lower : -std::numeric_limits<double>::infinity(),
                        row.upper, tol);
    out.rows.push_back(row);
  }
  return out;
}

/// Degenerate pair X = x, B = b (scalars, 0 < x < 1): S_n = b (1 - x^n) / (1 - x) is
/// bounded, so (1/n)|S_n|^p -> 0 and falls below any positive lower bracket.
struct FixedPointRow {
  std::size_t n = 0;
  double closed_form = 0.0;  // (1/n) |S_n|^p
  double enumerated = 0.0;   // same quantity from the enumeration oracle
};

struct FixedPointDemo {
  double x = 0.5;
  double b = 1.0;
  double p = 2.0;
  double fixed_point = 2.0;  // v = b / (1 - x)
  std::vector<FixedPointRow> rows;

  /// First n from which (1/n)|S_n|^p < level is guaranteed, since |S_n| < |v|.
  [[nodiscard]] std::size_t exit_index(double level) const {
    return static_cast<std::size_t>(std::floor(std::pow(std::abs(fixed_point), p) / level)) + 1;
  }
};

inline FixedPointDemo fixed_point_demo(double p, const std::vector<std::size_t>& n_list, double x = 0.5,
                                       double b = 1.0) {
  require(x > 0.0 && x < 1.0, ErrorCode::InvalidArgument, "fixed-point demo needs 0 < x < 1");
  PairSpec pair;
  pair.x_spec = FinitelySupported{{{x, 1.0}}};
  pair.b_components = {FinitelySupported{{{b, 1.0}}}};
  FixedPointDemo demo;
  demo.x = x;
  demo.b = b;
  demo.p = p;
  demo.fixed_point = b / (1.0 - x);
  for (std::size_t n : n_list) {
    const auto nn = static_cast<double>(n);
    const double sn = demo.fixed_point * (1.0 - std::pow(x, nn));
    demo.rows.push_back({n, pow_abs(sn, p) / nn, perpetuity_brute_force(pair, n, p).mean / nn});
  }
  return demo;
}

}  // namespace momsand

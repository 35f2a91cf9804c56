#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "momsand/error.hpp"
#include "momsand/montecarlo.hpp"
#include "momsand/parallel.hpp"
#include "momsand/random.hpp"

namespace momsand {

inline constexpr std::uint64_t kMaxFrequency = std::uint64_t{1} << 20;
inline constexpr double kLacunaryRatio = 3.0;

struct LacunaryReport {
  std::vector<std::uint64_t> seq;
  std::vector<double> ratios;  // n_{k+1} / n_k
  double min_ratio = std::numeric_limits<double>::infinity();
  double tail_sum = 0.0;  // sum of n_k / n_{k+1} over the prefix
  bool lacunary = true;
};

inline LacunaryReport check_lacunary(std::span<const std::uint64_t> seq) {
  require(!seq.empty(), ErrorCode::InvalidArgument, "frequency sequence is empty");
  require(seq.front() > 0, ErrorCode::NotIncreasing, "frequencies must be positive");
  LacunaryReport r;
  r.seq.assign(seq.begin(), seq.end());
  for (std::size_t k = 1; k < seq.size(); ++k) {
    require(seq[k] > seq[k - 1], ErrorCode::NotIncreasing, "frequencies must be strictly increasing");
    const double ratio = static_cast<double>(seq[k]) / static_cast<double>(seq[k - 1]);
    r.ratios.push_back(ratio);
    r.min_ratio = std::min(r.min_ratio, ratio);
    r.tail_sum += 1.0 / ratio;
  }
  r.lacunary = r.min_ratio >= kLacunaryRatio;
  return r;
}

/// prod_{j <= i} (1 + cos(n_j t)); 1 for i = 0.
inline double riesz_eval(std::span<const std::uint64_t> seq, std::size_t i, double t) {
  require(i <= seq.size(), ErrorCode::InvalidArgument, "product index exceeds sequence length");
  double r = 1.0;
  for (std::size_t j = 0; j < i; ++j) r *= 1.0 + std::cos(static_cast<double>(seq[j]) * t);
  return r;
}

struct TorusIntegral {
  double value = 0.0;
  double abs_error = 0.0;  // |I_N - I_{N/2}|
  std::uint64_t points = 0;
};

inline std::uint64_t min_points(std::span<const std::uint64_t> seq) {
  return std::max<std::uint64_t>(4096, 64 * seq.back());
}

/// Smallest power of two accepted by riesz_lp_norm.
inline std::uint64_t default_points(std::span<const std::uint64_t> seq) {
  std::uint64_t n = 1;
  while (n < min_points(seq)) n <<= 1;
  return n;
}

inline constexpr std::uint64_t kTorusBlock = 4096;

/// int |sum_i a_i R_i(t)|^p dt / 2pi by the trapezoid rule on N equispaced
/// points. cos(n_j t_k) is evaluated at the reduced angle 2 pi ((n_j k) mod N) / N.
/// Block sums are combined pairwise, so the value does not depend on the worker count.
inline TorusIntegral riesz_lp_norm(std::span<const std::uint64_t> seq, std::span<const double> a, double p,
                                   std::uint64_t points, unsigned threads = default_threads()) {
  check_lacunary(seq);
  require(seq.back() <= kMaxFrequency, ErrorCode::TooLarge, "frequencies are capped at 2^20");
  require(p >= 1.0, ErrorCode::InvalidArgument, "p must be >= 1");
  require(!a.empty() && a.size() <= seq.size() + 1, ErrorCode::InvalidArgument,
          "need between 1 and len(seq) + 1 coefficients");
  require(points >= min_points(seq) && points % 2 == 0, ErrorCode::TooFewPoints,
          "need an even number of points, at least max(4096, 64 n_m)");
  const std::size_t terms = a.size();
  const std::uint64_t blocks = (points + kTorusBlock - 1) / kTorusBlock;
  std::vector<double> all(blocks), even(blocks);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(points);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::uint64_t begin = b * kTorusBlock;
    const std::uint64_t end = std::min(points, begin + kTorusBlock);
    std::vector<double> vals(end - begin), evens;
    evens.reserve(vals.size() / 2 + 1);
    for (std::uint64_t k = begin; k < end; ++k) {
      double r = 1.0, s = a[0];
      for (std::size_t i = 1; i < terms; ++i) {
        const std::uint64_t m = (seq[i - 1] % points) * k % points;
        r *= 1.0 + std::cos(step * static_cast<double>(m));
        s += a[i] * r;
      }
      const double v = pow_abs(s, p);
      vals[k - begin] = v;
      if (k % 2 == 0) evens.push_back(v);
    }
    all[b] = pairwise_sum(vals);
    even[b] = pairwise_sum(evens);
  });
  TorusIntegral out;
  out.points = points;
  out.value = pairwise_sum(all) / static_cast<double>(points);
  const double coarse = pairwise_sum(even) / static_cast<double>(points / 2);
  out.abs_error = std::abs(out.value - coarse);
  return out;
}

inline TorusIntegral riesz_lp_norm(std::span<const std::uint64_t> seq, std::span<const double> a, double p) {
  return riesz_lp_norm(seq, a, p, default_points(seq));
}

/// Coefficients selecting the single product R_i.
inline std::vector<double> single_term(std::size_t i) {
  std::vector<double> a(i + 1, 0.0);
  a[i] = 1.0;
  return a;
}

// ---------------------------------------------------------------------------
// Torus against the probabilistic model with independent factors 1 + cos(Y)

struct CorollaryReport {
  std::vector<double> coefficients;
  double p = 0.0;
  TorusIntegral torus;
  EstimateWithCI probabilistic;
  std::vector<double> torus_terms;          // |a_i|^p int R_i^p
  std::vector<double> probabilistic_terms;  // |a_i|^p (E (1 + cos Y)^p)^i
  double ratio = 0.0;                       // torus / probabilistic
};

/// The probabilistic side is exact for one nonzero coefficient and for p = 1
/// with nonnegative coefficients, and a Monte Carlo estimate otherwise.
inline CorollaryReport corollary_check(std::span<const std::uint64_t> seq, std::span<const double> a, double p,
                                       std::uint64_t reps, RandomSource src,
                                       unsigned threads = default_threads()) {
  const auto lac = check_lacunary(seq);
  require(lac.lacunary, ErrorCode::NotLacunary, "frequency ratios must be >= 3");
  CorollaryReport r;
  r.coefficients.assign(a.begin(), a.end());
  r.p = p;
  r.torus = riesz_lp_norm(seq, a, p, default_points(seq), threads);
  const DistributionSpec factor = RieszFactor{};
  const double m = abs_moment(factor, p).value;
  std::size_t nonzero = 0;
  bool nonnegative = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0.0) ++nonzero;
    if (a[i] < 0.0) nonnegative = false;
    const double ap = pow_abs(a[i], p);
    r.torus_terms.push_back(ap == 0.0 ? 0.0
                                      : ap * riesz_lp_norm(seq, single_term(i), p, default_points(seq), threads).value);
    r.probabilistic_terms.push_back(ap * std::pow(m, static_cast<double>(i)));
  }
  const auto c = scalar_coefficients(r.coefficients);
  if (nonzero <= 1 || (p == 1.0 && nonnegative)) {
    CompensatedSum acc;
    for (double x : r.probabilistic_terms) acc.add(x);
    r.probabilistic = exact_value(acc.value());
    r.probabilistic.seed = src.seed;
  } else {
    r.probabilistic = estimate_lhs(factor, c, p, reps, src, nullptr, threads);
  }
  r.ratio = r.probabilistic.mean > 0.0 ? r.torus.value / r.probabilistic.mean
                                       : std::numeric_limits<double>::quiet_NaN();
  return r;
}

struct CorollaryDraws {
  std::vector<CorollaryReport> draws;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
};

/// Draw k takes coefficients a_0..a_m uniform on (-1, 1) from stream k of
/// src.seed and runs its Monte Carlo on seed splitmix(src.seed + k + 1).
/// The min and max ratios are empirical stand-ins for the comparison constants.
inline CorollaryDraws corollary_draws(std::span<const std::uint64_t> seq, double p, std::size_t draws,
                                      std::uint64_t reps, RandomSource src,
                                      unsigned threads = default_threads()) {
  CorollaryDraws out;
  for (std::size_t k = 0; k < draws; ++k) {
    Rng rng(src.with_stream(k));
    std::vector<double> a(seq.size() + 1);
    for (auto& x : a) x = 2.0 * rng.uniform() - 1.0;
    auto rep = corollary_check(seq, a, p, reps, {detail::splitmix64(src.seed + k + 1), 0}, threads);
    out.min_ratio = std::min(out.min_ratio, rep.ratio);
    out.max_ratio = std::max(out.max_ratio, rep.ratio);
    out.draws.push_back(std::move(rep));
  }
  return out;
}

}  // namespace momsand

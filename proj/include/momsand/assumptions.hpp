#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "momsand/distribution.hpp"
#include "momsand/error.hpp"
#include "momsand/moments.hpp"
#include "momsand/norms.hpp"
#include "momsand/random.hpp"

namespace momsand {

/// Absolute slack every certified inequality must hold with. Certified
/// parameters are pushed by this amount away from their exact values.
inline constexpr double kCertificateSlack = 1e-9;

/// Threshold on the Cauchy-Schwarz ratio below which |X| counts as degenerate.
inline constexpr double kDegenerateRatio = 1.0 - 1e-9;

inline std::vector<double> default_small_p_a_grid() { return {1.1, 1.25, 1.5, 2, 3, 5, 10}; }
inline std::vector<double> default_large_p_a_grid() { return {1.5, 2, 3, 5, 10, 20}; }

/// Nine equispaced points strictly inside (max(p-1, 1), p).
inline std::vector<double> default_q_grid(double p) {
  const double lo = std::max(p - 1.0, 1.0);
  std::vector<double> grid;
  if (!(p > lo)) return grid;
  for (int j = 1; j <= 9; ++j) grid.push_back(lo + (p - lo) * j / 10.0);
  return grid;
}

// ---------------------------------------------------------------------------
// p in (0, 1]

struct SmallPMargins {
  double lambda_slack = 0.0;  // lambda * sqrt(m) - E|X|^{p/2}
  double delta_slack = 0.0;   // window - delta * m
};

/// Witness that X satisfies the small-p hypotheses:
///   E|X|^{p/2} <= lambda (E|X|^p)^{1/2}
///   E(|X|^p - m) 1{m <= |X|^p <= A m} >= delta m,   m = E|X|^p.
struct SmallPCertificate {
  double p = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double a_param = 0.0;
  double lambda_exact = 0.0;
  double delta_exact = 0.0;
  double moment_p = 0.0;
  double moment_half = 0.0;
  double window = 0.0;
  SmallPMargins margins;
};

namespace detail {

inline MomentEstimate certified_moment(const DistributionSpec& spec, double q) {
  auto m = abs_moment(spec, q);
  require(m.method != MomentMethod::MonteCarlo, ErrorCode::InvalidArgument,
          "certificates accept deterministic moments only");
  return m;
}

/// E(|X|^p - m) 1{m <= |X|^p <= A m}.
inline double small_p_window(const DistributionSpec& spec, double p, double m, double a) {
  const double lo = std::pow(m, 1.0 / p);
  const double hi = std::pow(a * m, 1.0 / p);
  const double bps[] = {lo, hi};
  return expect_abs(
             spec,
             [&](double y) {
               if (y < lo || y > hi) return 0.0;
               return std::max(pow_abs(y, p) - m, 0.0);
             },
             bps)
      .value;
}

}  // namespace detail

/// Exact Cauchy-Schwarz ratio E|X|^{p/2} / (E|X|^p)^{1/2}.
inline double small_p_lambda(const DistributionSpec& spec, double p) {
  const double m = detail::certified_moment(spec, p).value;
  const double h = detail::certified_moment(spec, 0.5 * p).value;
  require(m > 0.0, ErrorCode::DegenerateZero, "X = 0 almost surely");
  return h / std::sqrt(m);
}

/// delta(A) = E(|X|^p - m) 1{m <= |X|^p <= A m} / m.
inline double small_p_delta(const DistributionSpec& spec, double p, double a) {
  const double m = detail::certified_moment(spec, p).value;
  return detail::small_p_window(spec, p, m, a) / m;
}

/// Fits (lambda, delta) for window parameter A.
inline SmallPCertificate fit_small_p(const DistributionSpec& spec, double p, double a) {
  require(p > 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "small-p certificate needs 0 < p <= 1");
  require(a > 1.0, ErrorCode::InvalidArgument, "window parameter A must exceed 1");
  SmallPCertificate c;
  c.p = p;
  c.a_param = a;
  c.moment_p = detail::certified_moment(spec, p).value;
  require(c.moment_p > 0.0, ErrorCode::DegenerateZero, "X = 0 almost surely");
  c.moment_half = detail::certified_moment(spec, 0.5 * p).value;
  c.lambda_exact = c.moment_half / std::sqrt(c.moment_p);
  require(c.lambda_exact < kDegenerateRatio, ErrorCode::DegenerateModulus,
          "|X| is degenerate (lambda = " + std::to_string(c.lambda_exact) + ")");
  c.lambda = c.lambda_exact + kCertificateSlack;
  c.window = detail::small_p_window(spec, p, c.moment_p, a);
  c.delta_exact = c.window / c.moment_p;
  require(c.delta_exact > kCertificateSlack, ErrorCode::EmptyWindow,
          "window [m, A m] carries no mass above m for A = " + std::to_string(a));
  c.delta = c.delta_exact - kCertificateSlack;
  c.margins.lambda_slack = c.lambda * std::sqrt(c.moment_p) - c.moment_half;
  c.margins.delta_slack = c.window - c.delta * c.moment_p;
  return c;
}

/// Certificates for every A in the grid with a nonempty window, in grid order.
inline std::vector<SmallPCertificate> fit_small_p_scan(const DistributionSpec& spec, double p,
                                                       const std::vector<double>& a_grid) {
  std::vector<SmallPCertificate> out;
  for (double a : a_grid) {
    try {
      out.push_back(fit_small_p(spec, p, a));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyWindow) throw;
    }
  }
  require(!out.empty(), ErrorCode::EmptyWindow, "delta(A) <= 0 on the whole A grid");
  return out;
}

/// Recomputes both inequalities from the moment oracle; true when they hold
/// with the recorded slack (to within tol).
inline bool verify(const DistributionSpec& spec, const SmallPCertificate& c, double tol = 1e-10) {
  const double m = abs_moment(spec, c.p).value;
  const double h = abs_moment(spec, 0.5 * c.p).value;
  const double window = detail::small_p_window(spec, c.p, m, c.a_param);
  const double lambda_slack = c.lambda * std::sqrt(m) - h;
  const double delta_slack = window - c.delta * m;
  return c.lambda < 1.0 && c.delta > 0.0 && lambda_slack >= -tol && delta_slack >= -tol &&
         std::abs(lambda_slack - c.margins.lambda_slack) <= tol &&
         std::abs(delta_slack - c.margins.delta_slack) <= tol;
}

// ---------------------------------------------------------------------------
// p > 1

struct LargePMargins {
  double mu_slack = 0.0;      // E||X| - E|X|| - mu * norm
  double tail_slack = 0.0;    // mu/4 * norm - tail
  double lambda_slack = 0.0;  // lambda * norm - ||X||_q
  std::vector<double> chain_slack;
};

/// Witness that X satisfies the large-p hypotheses (norm = (E|X|^p)^{1/p}):
///   E||X| - E|X|| >= mu * norm
///   E||X| - E|X|| 1{|X| > A norm} <= mu/4 * norm
///   ||X||_q <= lambda * norm for some q > max(p-1, 1)
///   ||X||_{p-k} <= lambda_k ||X||_{p-k+1}, k = 1..ceil(p)-1.
struct LargePCertificate {
  double p = 0.0;
  double mu = 0.0;
  double a_param = 0.0;
  double q = 0.0;
  double lambda = 0.0;
  std::vector<double> lambda_chain;
  double mu_exact = 0.0;
  double lambda_exact = 0.0;
  std::vector<double> chain_exact;
  double moment_p = 0.0;
  double mean_abs = 0.0;
  double mean_abs_dev = 0.0;
  double tail = 0.0;
  LargePMargins margins;
};

inline std::size_t chain_length(double p) {
  return p <= 1.0 ? 0 : static_cast<std::size_t>(std::ceil(p)) - 1;
}

namespace detail {

/// E||X| - E|X|| 1{|X| > threshold}.
inline double abs_dev_tail(const DistributionSpec& spec, double mean_abs, double threshold) {
  const double bps[] = {mean_abs, threshold};
  return expect_abs(
             spec, [&](double y) { return y > threshold ? std::abs(y - mean_abs) : 0.0; }, bps)
      .value;
}

inline double abs_dev(const DistributionSpec& spec, double mean_abs) {
  const double bps[] = {mean_abs};
  return expect_abs(spec, [&](double y) { return std::abs(y - mean_abs); }, bps).value;
}

inline double lp_norm(const DistributionSpec& spec, double q) {
  return std::pow(certified_moment(spec, q).value, 1.0 / q);
}

}  // namespace detail

/// Exact moment-ratio chain lambda_k = ||X||_{p-k} / ||X||_{p-k+1}.
inline std::vector<double> moment_ratio_chain(const DistributionSpec& spec, double p) {
  std::vector<double> chain;
  for (std::size_t k = 1; k <= chain_length(p); ++k) {
    const double lo = p - static_cast<double>(k);
    chain.push_back(detail::lp_norm(spec, lo) / detail::lp_norm(spec, lo + 1.0));
  }
  return chain;
}

/// Ratio ||X||_q / ||X||_p.
inline double large_p_lambda(const DistributionSpec& spec, double p, double q) {
  return detail::lp_norm(spec, q) / detail::lp_norm(spec, p);
}

/// Certificate for a fixed (A, q). Throws NoValidA when the tail condition
/// fails at A and NoValidQ when q is outside (max(p-1, 1), p).
inline LargePCertificate fit_large_p_at(const DistributionSpec& spec, double p, double a, double q) {
  require(p > 1.0, ErrorCode::InvalidArgument, "large-p certificate needs p > 1");
  require(q > std::max(p - 1.0, 1.0) && q < p, ErrorCode::NoValidQ,
          "q must lie in (max(p-1,1), p)");
  LargePCertificate c;
  c.p = p;
  c.q = q;
  c.a_param = a;
  c.moment_p = detail::certified_moment(spec, p).value;
  require(c.moment_p > 0.0, ErrorCode::DegenerateZero, "X = 0 almost surely");
  const double nrm = std::pow(c.moment_p, 1.0 / p);
  c.mean_abs = detail::certified_moment(spec, 1.0).value;
  c.mean_abs_dev = detail::abs_dev(spec, c.mean_abs);
  c.mu_exact = c.mean_abs_dev / nrm;
  require(c.mu_exact >= 1e-9 && c.mu_exact > 2 * kCertificateSlack, ErrorCode::DegenerateModulus,
          "E||X| - E|X|| vanishes");
  c.mu = c.mu_exact - kCertificateSlack;
  c.tail = detail::abs_dev_tail(spec, c.mean_abs, a * nrm);
  c.margins.mu_slack = c.mean_abs_dev - c.mu * nrm;
  c.margins.tail_slack = 0.25 * c.mu * nrm - c.tail;
  require(c.margins.tail_slack >= kCertificateSlack, ErrorCode::NoValidA,
          "tail condition fails at A = " + std::to_string(a));

  c.lambda_exact = detail::lp_norm(spec, q) / nrm;
  c.lambda = c.lambda_exact + kCertificateSlack;
  require(c.lambda < 1.0, ErrorCode::DegenerateModulus, "moment ratio lambda(q) is not below 1");
  c.margins.lambda_slack = c.lambda * nrm - detail::lp_norm(spec, q);

  c.chain_exact = moment_ratio_chain(spec, p);
  for (std::size_t k = 0; k < c.chain_exact.size(); ++k) {
    const double lam = c.chain_exact[k] + kCertificateSlack;
    require(lam < 1.0, ErrorCode::DegenerateModulus, "moment ratio chain reaches 1");
    c.lambda_chain.push_back(lam);
    const double lo = p - static_cast<double>(k + 1);
    c.margins.chain_slack.push_back(lam * detail::lp_norm(spec, lo + 1.0) - detail::lp_norm(spec, lo));
  }
  return c;
}

/// Fits all large-p parameters: mu from the law, A the smallest grid value
/// satisfying the tail condition, q the grid point minimizing lambda(q).
inline LargePCertificate fit_large_p(const DistributionSpec& spec, double p,
                                     const std::vector<double>& q_grid,
                                     const std::vector<double>& a_grid) {
  require(p > 1.0, ErrorCode::InvalidArgument, "large-p certificate needs p > 1");
  const double q_lo = std::max(p - 1.0, 1.0);
  std::vector<double> qs;
  for (double q : q_grid)
    if (q > q_lo && q < p) qs.push_back(q);
  require(!qs.empty(), ErrorCode::NoValidQ, "no q in (max(p-1,1), p) on the grid");

  // Degeneracy first so a degenerate law reports DegenerateModulus, not NoValidA.
  const double nrm = detail::lp_norm(spec, p);
  const double mean_abs = detail::certified_moment(spec, 1.0).value;
  const double mu_exact = detail::abs_dev(spec, mean_abs) / nrm;
  require(mu_exact >= 1e-9, ErrorCode::DegenerateModulus, "E||X| - E|X|| vanishes");

  double best_q = qs.front();
  double best_lambda = std::numeric_limits<double>::infinity();
  for (double q : qs) {
    const double lam = detail::lp_norm(spec, q) / nrm;
    if (lam < best_lambda) {
      best_lambda = lam;
      best_q = q;
    }
  }
  std::vector<double> as(a_grid);
  std::sort(as.begin(), as.end());
  for (double a : as) {
    try {
      return fit_large_p_at(spec, p, a, best_q);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidA) throw;
    }
  }
  throw Error(ErrorCode::NoValidA, "tail condition fails for every A on the grid");
}

inline bool verify(const DistributionSpec& spec, const LargePCertificate& c, double tol = 1e-10) {
  const double nrm = detail::lp_norm(spec, c.p);
  const double mean_abs = abs_moment(spec, 1.0).value;
  const double dev = detail::abs_dev(spec, mean_abs);
  const double tail = detail::abs_dev_tail(spec, mean_abs, c.a_param * nrm);
  const double mu_slack = dev - c.mu * nrm;
  const double tail_slack = 0.25 * c.mu * nrm - tail;
  const double lambda_slack = c.lambda * nrm - detail::lp_norm(spec, c.q);
  bool ok = c.mu > 0.0 && c.lambda < 1.0 && mu_slack >= -tol && tail_slack >= -tol &&
            lambda_slack >= -tol && std::abs(mu_slack - c.margins.mu_slack) <= tol &&
            std::abs(tail_slack - c.margins.tail_slack) <= tol &&
            std::abs(lambda_slack - c.margins.lambda_slack) <= tol;
  if (c.lambda_chain.size() != chain_length(c.p)) return false;
  for (std::size_t k = 0; k < c.lambda_chain.size(); ++k) {
    const double lo = c.p - static_cast<double>(k + 1);
    const double slack = c.lambda_chain[k] * detail::lp_norm(spec, lo + 1.0) - detail::lp_norm(spec, lo);
    ok = ok && c.lambda_chain[k] < 1.0 && slack >= -tol &&
         std::abs(slack - c.margins.chain_slack[k]) <= tol;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Pairs (X, B) for the perpetuity S = XS + B

enum class Coupling { Independent, ComonotoneScalar };

constexpr std::string_view to_string(Coupling c) noexcept {
  return c == Coupling::Independent ? "independent" : "comonotone-scalar";
}

inline Coupling parse_coupling(std::string_view s) {
  if (s == "independent") return Coupling::Independent;
  if (s == "comonotone-scalar" || s == "comonotone") return Coupling::ComonotoneScalar;
  throw Error(ErrorCode::ParseError, "unknown coupling '" + std::string(s) + "'");
}

/// B_j = intercept_j + slope_j * X^power, a monotone function of X per coordinate.
struct MonotoneMap {
  std::vector<double> intercept;
  std::vector<double> slope;
  double power = 1.0;
};

/// Law of (X, B) with X >= 0 and B in R^d.
struct PairSpec {
  DistributionSpec x_spec;
  std::vector<DistributionSpec> b_components;  // Independent coupling
  MonotoneMap map;                             // ComonotoneScalar coupling
  Coupling coupling = Coupling::Independent;
  NormKind norm = NormKind::L2;

  [[nodiscard]] std::size_t dim() const {
    return coupling == Coupling::Independent ? b_components.size() : map.intercept.size();
  }
};

inline void validate(const PairSpec& pair) {
  validate(pair.x_spec);
  require(is_nonnegative(pair.x_spec), ErrorCode::InvalidSpec, "X must be nonnegative");
  if (pair.coupling == Coupling::Independent) {
    require(!pair.b_components.empty(), ErrorCode::InvalidSpec, "B needs at least one component");
    for (const auto& b : pair.b_components) validate(b);
  } else {
    require(!pair.map.intercept.empty() && pair.map.intercept.size() == pair.map.slope.size(),
            ErrorCode::InvalidSpec, "monotone map needs matching intercept/slope vectors");
    require(std::isfinite(pair.map.power) && pair.map.power > 0.0, ErrorCode::InvalidSpec,
            "monotone map power must be positive");
  }
}

/// Draws (X_i, B_i) pairs.
class PairSampler {
 public:
  explicit PairSampler(const PairSpec& pair) : pair_(pair), x_(pair.x_spec) {
    validate(pair);
    for (const auto& b : pair.b_components) b_.emplace_back(b);
  }

  /// Returns X and writes B into b (size dim()).
  double operator()(Rng& rng, std::span<double> b) const {
    const double x = x_(rng);
    if (pair_.coupling == Coupling::Independent) {
      for (std::size_t j = 0; j < b_.size(); ++j) b[j] = b_[j](rng);
    } else {
      const double g = pair_.map.power == 1.0 ? x : std::pow(x, pair_.map.power);
      for (std::size_t j = 0; j < b.size(); ++j) b[j] = pair_.map.intercept[j] + pair_.map.slope[j] * g;
    }
    return x;
  }

  [[nodiscard]] std::size_t dim() const { return pair_.dim(); }

 private:
  PairSpec pair_;
  Sampler x_;
  std::vector<Sampler> b_;
};

enum class NondegeneracyStatus { Ok, ViolationSuspected };

constexpr std::string_view to_string(NondegeneracyStatus s) noexcept {
  return s == NondegeneracyStatus::Ok ? "OK" : "VIOLATION-SUSPECTED";
}

/// Evidence about P(Xv + B = v) < 1 for all v. Never a proof.
struct NondegeneracyReport {
  std::vector<double> candidate;  // most likely fixed point
  double margin = 0.0;            // estimated P(X v + B != v) at the candidate
  std::size_t samples = 0;
  NondegeneracyStatus status = NondegeneracyStatus::Ok;
};

inline constexpr double kNondegeneracyThreshold = 1e-3;

/// Samples (X, B); every fixed point v satisfies B = (1 - X) v, so if one
/// exists almost surely the samples of B / (1 - X) collapse onto it. The
/// coordinatewise median of those samples is tested as the candidate.
inline NondegeneracyReport check_pair_nondegeneracy(const PairSpec& pair, std::size_t samples,
                                                    RandomSource src) {
  require(samples > 0, ErrorCode::InvalidArgument, "need at least one sample");
  PairSampler sampler(pair);
  const std::size_t d = sampler.dim();
  std::vector<double> xs(samples);
  std::vector<double> bs(samples * d);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(src.with_stream(src.stream_id + i));
    xs[i] = sampler(rng, std::span<double>(bs).subspan(i * d, d));
  }
  NondegeneracyReport report;
  report.samples = samples;
  report.candidate.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> cands;
    for (std::size_t i = 0; i < samples; ++i)
      if (std::abs(1.0 - xs[i]) > 1e-12) cands.push_back(bs[i * d + j] / (1.0 - xs[i]));
    if (cands.empty()) continue;
    auto mid = cands.begin() + static_cast<std::ptrdiff_t>(cands.size() / 2);
    std::nth_element(cands.begin(), mid, cands.end());
    report.candidate[j] = *mid;
  }
  const double vnorm = norm(report.candidate, NormKind::Sup);
  std::size_t off = 0;
  std::vector<double> r(d);
  for (std::size_t i = 0; i < samples; ++i) {
    double bnorm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      r[j] = xs[i] * report.candidate[j] + bs[i * d + j] - report.candidate[j];
      bnorm = std::max(bnorm, std::abs(bs[i * d + j]));
    }
    if (norm(r, NormKind::Sup) > 1e-9 * (1.0 + vnorm + bnorm)) ++off;
  }
  report.margin = static_cast<double>(off) / static_cast<double>(samples);
  report.status = report.margin < kNondegeneracyThreshold ? NondegeneracyStatus::ViolationSuspected
                                                          : NondegeneracyStatus::Ok;
  return report;
}

}  // namespace momsand

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "momsand/assumptions.hpp"

namespace momsand {
namespace {

template <class Fn>
ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

// Random nondegenerate finite-support law normalized to E|X|^p = 1.
DistributionSpec random_finite_law(std::mt19937_64& gen, double p, bool allow_negative) {
  std::uniform_int_distribution<int> count(2, 4);
  std::uniform_real_distribution<double> val(allow_negative ? -2.0 : 0.05, 2.5);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  FinitelySupported fs;
  const int k = count(gen);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    fs.atoms.push_back({val(gen), w(gen)});
    total += fs.atoms.back().prob;
  }
  for (auto& a : fs.atoms) a.prob /= total;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < fs.atoms.size(); ++i) sum += fs.atoms[i].prob;
  fs.atoms.back().prob = 1.0 - sum;
  return normalize_unit_p_moment(fs, p).spec;
}

TEST(FitSmallP, TwoPointExample) {
  auto c = fit_small_p(TwoPoint{0.5, 1.5, 0.5}, 1.0, 2.0);
  EXPECT_NEAR(c.lambda_exact, (std::sqrt(0.5) + std::sqrt(1.5)) / 2.0, 1e-15);
  EXPECT_NEAR(c.lambda, 0.96593, 1e-5);
  EXPECT_NEAR(c.delta_exact, 0.25, 1e-15);
  EXPECT_NEAR(c.delta, 0.25, 2e-9);
  EXPECT_GE(c.margins.lambda_slack, kCertificateSlack * 0.999);
  EXPECT_GE(c.margins.delta_slack, kCertificateSlack * 0.999);
}

TEST(FitSmallP, UniformExample) {
  // E sqrt(X) = (1/2) int_0^2 sqrt(x) dx = 2 sqrt(2) / 3; delta(2) = int_1^2 (x - 1)/2 dx = 1/4.
  auto c = fit_small_p(Uniform{0.0, 2.0}, 1.0, 2.0);
  EXPECT_NEAR(c.lambda_exact, 2.0 * std::sqrt(2.0) / 3.0, 1e-12);
  EXPECT_NEAR(c.delta_exact, 0.25, 1e-12);
}

TEST(FitSmallP, DegenerateAndEmptyWindow) {
  EXPECT_EQ(error_code_of([] { fit_small_p(RademacherSign{}, 1.0, 2.0); }),
            ErrorCode::DegenerateModulus);
  // Upper atom 1.5 lies outside [1, 1.25].
  EXPECT_EQ(error_code_of([] { fit_small_p(TwoPoint{0.5, 1.5, 0.5}, 1.0, 1.25); }),
            ErrorCode::EmptyWindow);
  EXPECT_EQ(error_code_of([] { fit_small_p_scan(TwoPoint{0.5, 1.5, 0.5}, 1.0, {1.1, 1.25}); }),
            ErrorCode::EmptyWindow);
  EXPECT_EQ(error_code_of([] { fit_small_p(Uniform{0, 1}, 1.5, 2.0); }), ErrorCode::InvalidArgument);
}

TEST(FitLargeP, TwoPointExample) {
  const DistributionSpec spec = TwoPoint{0.6, std::sqrt(1.64), 0.5};
  EXPECT_NEAR(abs_moment(spec, 2.0).value, 1.0, 1e-15);
  auto c = fit_large_p(spec, 2.0, default_q_grid(2.0), default_large_p_a_grid());
  const double mean = (0.6 + std::sqrt(1.64)) / 2.0;
  EXPECT_NEAR(c.mean_abs, mean, 1e-15);
  EXPECT_NEAR(mean, 0.94031, 1e-5);
  EXPECT_NEAR(c.mu_exact, (std::sqrt(1.64) - 0.6) / 2.0, 1e-15);
  EXPECT_NEAR(c.mu, 0.34031, 1e-5);
  EXPECT_EQ(c.a_param, 1.5);
  EXPECT_EQ(c.tail, 0.0);
  // lambda(q) increases in q, so the smallest grid point wins.
  EXPECT_DOUBLE_EQ(c.q, default_q_grid(2.0).front());
  ASSERT_EQ(c.lambda_chain.size(), 1u);
  EXPECT_NEAR(c.chain_exact[0], mean / 1.0, 1e-15);
}

TEST(FitLargeP, LogNormalChainHasClosedForm) {
  // ||X||_q = exp(mu + q sigma^2 / 2), so every unit-step ratio is exp(-sigma^2 / 2).
  const double sigma = 0.5;
  auto spec = normalize_unit_p_moment(LogNormal{0.0, sigma}, 2.5).spec;
  auto c = fit_large_p(spec, 2.5, default_q_grid(2.5), default_large_p_a_grid());
  ASSERT_EQ(c.lambda_chain.size(), 2u);
  const double want = std::exp(-sigma * sigma / 2.0);
  EXPECT_NEAR(want, 0.882497, 1e-6);
  EXPECT_NEAR(c.chain_exact[0], want, 1e-12);
  EXPECT_NEAR(c.chain_exact[1], want, 1e-12);
  EXPECT_LT(c.lambda_chain[0], 1.0);
  EXPECT_NEAR(c.lambda_exact, std::exp(-sigma * sigma * (2.5 - c.q) / 2.0), 1e-12);
}

TEST(FitLargeP, Errors) {
  EXPECT_EQ(error_code_of([] {
              fit_large_p(RademacherSign{}, 2.0, default_q_grid(2.0), default_large_p_a_grid());
            }),
            ErrorCode::DegenerateModulus);
  EXPECT_EQ(error_code_of([] {
              fit_large_p(TwoPoint{0.5, 1.5, 0.5}, 2.0, {0.5, 1.0, 2.0, 3.0}, default_large_p_a_grid());
            }),
            ErrorCode::NoValidQ);
  EXPECT_EQ(error_code_of([] { fit_large_p(TwoPoint{0.5, 1.5, 0.5}, 2.0, {}, {2.0}); }),
            ErrorCode::NoValidQ);
  // Heavy upper atom: the tail above A = 1.5 carries most of the deviation.
  auto spec = normalize_unit_p_moment(TwoPoint{0.1, 3.0, 0.9}, 2.0).spec;
  EXPECT_EQ(error_code_of([&] { fit_large_p(spec, 2.0, default_q_grid(2.0), {1.5}); }),
            ErrorCode::NoValidA);
}

TEST(DefaultGrids, QGridStrictlyInside) {
  for (double p : {1.2, 2.0, 2.5, 4.0}) {
    auto g = default_q_grid(p);
    ASSERT_EQ(g.size(), 9u);
    for (double q : g) {
      EXPECT_GT(q, std::max(p - 1.0, 1.0));
      EXPECT_LT(q, p);
    }
  }
}

TEST(Properties, SmallPCertificatesOnFiniteLaws) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = std::uniform_real_distribution<double>(0.1, 1.0)(gen);
    auto spec = random_finite_law(gen, p, true);
    if (has_degenerate_modulus(spec)) continue;
    double top = 0.0;
    const auto at = *atoms(spec);
    for (const auto& a : at) top = std::max(top, pow_abs(a.value, p));
    // A large enough that [1, A] captures the largest atom (which exceeds 1).
    auto c = fit_small_p(spec, p, top * 1.01 + 1.0);
    EXPECT_LT(c.lambda, 1.0);
    EXPECT_GT(c.delta, 0.0);
    EXPECT_TRUE(verify(spec, c));
  }
}

TEST(Properties, LambdaOfQNondecreasing) {
  std::mt19937_64 gen(5);
  std::vector<DistributionSpec> specs{Uniform{0.0, 2.0}, LogNormal{0.0, 0.7}, Exponential{1.0},
                                      RieszFactor{}};
  for (int i = 0; i < 20; ++i) specs.push_back(random_finite_law(gen, 2.5, true));
  for (const auto& spec : specs) {
    const double p = 2.5;
    double prev = 0.0;
    for (int j = 1; j <= 10; ++j) {
      const double q = p * j / 10.0 - 1e-3;
      const double lam = large_p_lambda(spec, p, q);
      EXPECT_GE(lam, prev - 1e-13) << to_string(spec) << " q=" << q;
      prev = lam;
    }
  }
}

TEST(Properties, CertificatesReverify) {
  const std::vector<DistributionSpec> raw{TwoPoint{0.5, 1.5, 0.5}, Uniform{0.0, 2.0},
                                          LogNormal{0.0, 0.5}, Exponential{2.0}, RieszFactor{}};
  for (const auto& base : raw) {
    auto small = normalize_unit_p_moment(base, 0.5).spec;
    for (const auto& c : fit_small_p_scan(small, 0.5, default_small_p_a_grid()))
      EXPECT_TRUE(verify(small, c)) << to_string(base) << " A=" << c.a_param;
    auto large = normalize_unit_p_moment(base, 2.0).spec;
    auto lc = fit_large_p(large, 2.0, default_q_grid(2.0), default_large_p_a_grid());
    EXPECT_TRUE(verify(large, lc)) << to_string(base);
    // Tampering with a parameter breaks verification.
    auto bad = lc;
    bad.mu *= 1.5;
    EXPECT_FALSE(verify(large, bad));
  }
}

// E|uX + v|^p 1{|X| <= A} >= mu^p / 8^p * min(1, (E|X|)^-p) * max(|u|^p, |v|^p).
TEST(Properties, LargePSingleStepLowerBound) {
  std::mt19937_64 gen(23);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double p = std::uniform_real_distribution<double>(1.05, 3.0)(gen);
    auto spec = random_finite_law(gen, p, true);
    LargePCertificate c;
    try {
      c = fit_large_p(spec, p, default_q_grid(p), default_large_p_a_grid());
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const auto at = *atoms(spec);
    const double factor = std::pow(c.mu, p) / std::pow(8.0, p) *
                          std::min(1.0, std::pow(c.mean_abs, -p));
    for (int u = -2; u <= 2; ++u) {
      for (int v = -2; v <= 2; ++v) {
        double lhs = 0.0;
        for (const auto& a : at)
          if (std::abs(a.value) <= c.a_param) lhs += a.prob * pow_abs(u * a.value + v, p);
        const double rhs = factor * std::max(pow_abs(u, p), pow_abs(v, p));
        EXPECT_GE(lhs, rhs - 1e-12) << to_string(spec) << " u=" << u << " v=" << v;
      }
    }
  }
  EXPECT_GT(checked, 50);
}

// E|uX + v|^p 1{|X|^p <= A} >= delta * max(|u|^p, |v|^p).
TEST(Properties, SmallPSingleStepLowerBound) {
  std::mt19937_64 gen(29);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double p = std::uniform_real_distribution<double>(0.1, 1.0)(gen);
    auto spec = random_finite_law(gen, p, true);
    std::vector<SmallPCertificate> certs;
    try {
      certs = fit_small_p_scan(spec, p, default_small_p_a_grid());
    } catch (const Error&) {
      continue;
    }
    const auto at = *atoms(spec);
    for (const auto& c : certs) {
      ++checked;
      for (int u = -2; u <= 2; ++u) {
        for (int v = -2; v <= 2; ++v) {
          double lhs = 0.0;
          for (const auto& a : at)
            if (pow_abs(a.value, p) <= c.a_param) lhs += a.prob * pow_abs(u * a.value + v, p);
          EXPECT_GE(lhs, c.delta * std::max(pow_abs(u, p), pow_abs(v, p)) - 1e-12);
        }
      }
    }
  }
  EXPECT_GT(checked, 50);
}

PairSpec constant_pair(double x, std::vector<double> b) {
  PairSpec pair;
  pair.x_spec = FinitelySupported{{{x, 1.0}}};
  for (double v : b) pair.b_components.push_back(FinitelySupported{{{v, 1.0}}});
  return pair;
}

TEST(PairNondegeneracy, ConstantPairHasFixedPoint) {
  auto report = check_pair_nondegeneracy(constant_pair(0.5, {1.0, 1.0}), 1000, {1, 0});
  EXPECT_EQ(report.status, NondegeneracyStatus::ViolationSuspected);
  ASSERT_EQ(report.candidate.size(), 2u);
  EXPECT_DOUBLE_EQ(report.candidate[0], 2.0);
  EXPECT_DOUBLE_EQ(report.candidate[1], 2.0);
  EXPECT_EQ(report.margin, 0.0);
}

TEST(PairNondegeneracy, ZeroBHasZeroFixedPoint) {
  PairSpec pair;
  pair.x_spec = TwoPoint{0.5, 1.5, 0.5};
  pair.b_components = {FinitelySupported{{{0.0, 1.0}}}};
  auto report = check_pair_nondegeneracy(pair, 1000, {2, 0});
  EXPECT_EQ(report.status, NondegeneracyStatus::ViolationSuspected);
  EXPECT_EQ(report.candidate[0], 0.0);
}

TEST(PairNondegeneracy, IndependentContinuousPairIsNondegenerate) {
  PairSpec pair;
  pair.x_spec = Uniform{0.0, 1.0};
  pair.b_components = {Uniform{-1.0, 1.0}};
  auto report = check_pair_nondegeneracy(pair, 10000, {3, 0});
  EXPECT_EQ(report.status, NondegeneracyStatus::Ok);
  EXPECT_GT(report.margin, 0.99);
}

TEST(PairNondegeneracy, ComonotoneFixedPointIsDetected) {
  // B = v (1 - X) gives X v + B = v identically.
  PairSpec pair;
  pair.x_spec = TwoPoint{0.5, 1.5, 0.5};
  pair.coupling = Coupling::ComonotoneScalar;
  pair.map = {{3.0}, {-3.0}, 1.0};
  EXPECT_EQ(check_pair_nondegeneracy(pair, 2000, {4, 0}).status,
            NondegeneracyStatus::ViolationSuspected);
  pair.map = {{1.0}, {1.0}, 1.0};  // B = 1 + X
  EXPECT_EQ(check_pair_nondegeneracy(pair, 2000, {4, 0}).status, NondegeneracyStatus::Ok);
}

TEST(PairSpec, Validation) {
  PairSpec pair;
  pair.x_spec = Uniform{-1.0, 1.0};
  pair.b_components = {Uniform{0.0, 1.0}};
  EXPECT_EQ(error_code_of([&] { validate(pair); }), ErrorCode::InvalidSpec);
}

}  // namespace
}  // namespace momsand

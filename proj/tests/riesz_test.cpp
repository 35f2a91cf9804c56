#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "momsand/riesz.hpp"

namespace momsand {
namespace {

using Seq = std::vector<std::uint64_t>;

const Seq kPowersOfFour{4, 16, 64, 256, 1024};

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

TEST(Lacunary, Examples) {
  const auto a = check_lacunary(Seq{4, 16, 64, 256});
  EXPECT_EQ(a.min_ratio, 4.0);
  EXPECT_TRUE(a.lacunary);
  EXPECT_NEAR(a.tail_sum, 0.75, 1e-15);
  EXPECT_FALSE(check_lacunary(Seq{2, 4, 8}).lacunary);
  const auto b = check_lacunary(Seq{3, 10, 31});
  ASSERT_EQ(b.ratios.size(), 2u);
  EXPECT_DOUBLE_EQ(b.ratios[0], 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.ratios[1], 3.1);
  EXPECT_TRUE(b.lacunary);
  EXPECT_TRUE(check_lacunary(Seq{7}).lacunary);
  EXPECT_EQ(error_code_of([] { check_lacunary(Seq{4, 4}); }), ErrorCode::NotIncreasing);
  EXPECT_EQ(error_code_of([] { check_lacunary(Seq{0, 4}); }), ErrorCode::NotIncreasing);
}

TEST(RieszEval, Examples) {
  const Seq s{4, 16};
  EXPECT_EQ(riesz_eval(s, 0, 1.234), 1.0);
  EXPECT_EQ(riesz_eval(s, 1, 0.0), 2.0);
  EXPECT_NEAR(riesz_eval(s, 2, std::numbers::pi / 4), 0.0, 1e-15);
  for (int k = 0; k < 1000; ++k) EXPECT_GE(riesz_eval(kPowersOfFour, 5, 0.00628 * k), 0.0);
}

TEST(RieszNorm, SquareOfTwoProductsIsTwoPointTwoFive) {
  const auto r = riesz_lp_norm(Seq{4, 16}, std::vector<double>{0, 0, 1}, 2.0);
  EXPECT_NEAR(r.value, 2.25, 1e-12);
  EXPECT_NEAR(riesz_lp_norm(Seq{4, 16}, std::vector<double>{1}, 3.7).value, 1.0, 1e-14);
}

TEST(RieszNorm, MeanOneAndPowersOfThreeHalves) {
  const std::uint64_t n = std::uint64_t{1} << 17;
  for (std::size_t i = 0; i <= 5; ++i) {
    const auto a = single_term(i);
    EXPECT_NEAR(riesz_lp_norm(kPowersOfFour, a, 1.0, n).value, 1.0, 1e-8) << i;
    EXPECT_NEAR(riesz_lp_norm(kPowersOfFour, a, 2.0, n).value, std::pow(1.5, double(i)), 1e-6) << i;
  }
  for (const Seq& s : {Seq{3, 9, 27}, Seq{3, 10, 31, 100}, Seq{5, 17, 60, 200, 701}}) {
    for (std::size_t i = 1; i <= s.size(); ++i) {
      EXPECT_NEAR(riesz_lp_norm(s, single_term(i), 1.0).value, 1.0, 1e-8);
      EXPECT_NEAR(riesz_lp_norm(s, single_term(i), 2.0).value, std::pow(1.5, double(i)), 1e-6);
    }
  }
}

TEST(RieszNorm, DoublingPointsChangesLittle) {
  const std::vector<double> a{0.3, -1.0, 0.5, 2.0, -0.7, 1.1};
  for (double p : {1.0, 2.0, 3.0}) {
    const auto coarse = riesz_lp_norm(kPowersOfFour, a, p, 64 * 1024);
    const auto fine = riesz_lp_norm(kPowersOfFour, a, p, 128 * 1024);
    if (p == 2.0 || p == 3.0) {
      EXPECT_LT(std::abs(fine.value - coarse.value), 1e-9 * fine.value) << p;
    }
    EXPECT_GE(fine.abs_error, 0.0);
  }
  const auto pos = riesz_lp_norm(kPowersOfFour, single_term(5), 1.0, 64 * 1024);
  EXPECT_LT(std::abs(riesz_lp_norm(kPowersOfFour, single_term(5), 1.0, 128 * 1024).value - pos.value),
            1e-9 * pos.value);
}

TEST(RieszNorm, Homogeneity) {
  const std::vector<double> a{0.2, -0.4, 1.0, 0.3};
  std::vector<double> ta = a;
  const double t = 2.5;
  for (auto& x : ta) x *= t;
  for (double p : {1.0, 1.5, 3.0}) {
    const double v = riesz_lp_norm(Seq{4, 13, 40}, a, p).value;
    EXPECT_NEAR(riesz_lp_norm(Seq{4, 13, 40}, ta, p).value, std::pow(t, p) * v, 1e-12 * std::pow(t, p) * v);
  }
}

TEST(RieszNorm, IndependentOfWorkerCount) {
  const std::vector<double> a{0.2, -0.4, 1.0, 0.3};
  const auto one = riesz_lp_norm(Seq{4, 16, 64}, a, 2.5, 1 << 16, 1);
  const auto four = riesz_lp_norm(Seq{4, 16, 64}, a, 2.5, 1 << 16, 4);
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.abs_error, four.abs_error);
}

TEST(RieszNorm, Errors) {
  EXPECT_EQ(error_code_of([] { riesz_lp_norm(Seq{4, 16}, std::vector<double>{1}, 2.0, 2048); }),
            ErrorCode::TooFewPoints);
  EXPECT_EQ(error_code_of([] { riesz_lp_norm(Seq{4, 160}, std::vector<double>{1}, 2.0, 8192); }),
            ErrorCode::TooFewPoints);
  EXPECT_EQ(error_code_of([] { riesz_lp_norm(Seq{4, 16}, std::vector<double>{1, 1, 1, 1}, 2.0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { riesz_lp_norm(Seq{4, 16}, std::vector<double>{1}, 0.5); }),
            ErrorCode::InvalidArgument);
}

TEST(Corollary, ExactCases) {
  for (std::size_t i = 1; i <= 4; ++i) {
    const auto a = single_term(i);
    const auto r = corollary_check(Seq{4, 16, 64, 256}, a, 2.0, 1000, {});
    EXPECT_TRUE(r.probabilistic.exact);
    EXPECT_NEAR(r.probabilistic.mean, std::pow(1.5, double(i)), 1e-12);
    EXPECT_NEAR(r.ratio, 1.0, 1e-6);
  }
  const auto r = corollary_check(Seq{4, 16, 64}, std::vector<double>{0.5, 1.0, 0.0, 2.0}, 1.0, 1000, {});
  EXPECT_NEAR(r.probabilistic.mean, 3.5, 1e-12);
  EXPECT_NEAR(r.ratio, 1.0, 1e-8);
  EXPECT_EQ(error_code_of([] { corollary_check(Seq{2, 4}, std::vector<double>{1, 1}, 2.0, 1000, {}); }),
            ErrorCode::NotLacunary);
}

TEST(Corollary, RandomDrawsStayComparable) {
  const auto d = corollary_draws(Seq{4, 16, 64}, 3.0, 5, 20000, {21, 0});
  ASSERT_EQ(d.draws.size(), 5u);
  EXPECT_GT(d.min_ratio, 0.0);
  EXPECT_LT(d.max_ratio / d.min_ratio, 10.0);
  for (const auto& r : d.draws) EXPECT_FALSE(r.probabilistic.exact);
}

}  // namespace
}  // namespace momsand

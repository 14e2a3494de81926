#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "pi3nn/error.hpp"
#include "pi3nn/rootfind.hpp"

namespace pi3nn::rootfind {
namespace {

// Distinct positive ratios.
std::vector<double> random_ratios(std::size_t n, std::mt19937_64& rng) {
  std::lognormal_distribution<double> d(0.0, 1.5);
  std::vector<double> r;
  while (r.size() < n) {
    r.push_back(d(rng));
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  std::shuffle(r.begin(), r.end(), rng);
  return r;
}

TEST(MedianShift, SymmetricFive) {
  const std::vector<double> r{-2, -1, 0, 1, 2};
  const double nu = solve_median_shift(r);
  EXPECT_EQ(count_above(r, nu), 2U);
  EXPECT_GE(nu, 0.0);
  EXPECT_LT(nu, 1.0);
  EXPECT_DOUBLE_EQ(nu, 0.5);
}

TEST(MedianShift, SingleResidual) {
  const std::vector<double> r{5.0};
  const double nu = solve_median_shift(r);
  EXPECT_GE(nu, 5.0);
  EXPECT_EQ(count_above(r, nu), 0U);
  const std::vector<double> neg{-3.0};
  EXPECT_EQ(count_above(neg, solve_median_shift(neg)), 0U);
}

TEST(MedianShift, BruteForceCountOnRandomLists) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 1000;
    std::vector<double> r(n);
    for (double& v : r) v = d(rng);
    const double nu = solve_median_shift(r);
    std::size_t above = 0;
    for (double v : r) above += v > nu ? 1 : 0;
    EXPECT_EQ(above, n / 2);
  }
  const std::vector<double> n1000 = [&] {
    std::vector<double> v(1000);
    for (double& x : v) x = d(rng);
    return v;
  }();
  EXPECT_EQ(count_above(n1000, solve_median_shift(n1000)), 500U);
}

TEST(MedianShift, Errors) {
  EXPECT_THROW(solve_median_shift(std::vector<double>{}), Error);
  const std::vector<double> tied{1.0, 2.0, 2.0, 3.0};
  try {
    solve_median_shift(tied);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTie);
  }
}

TEST(Exceedance, OneToFour) {
  const std::vector<double> r{1, 2, 3, 4};
  // Brute force over a fine grid: v with count exactly 1 lies in [3, 4).
  double lo = INFINITY;
  double hi = -INFINITY;
  for (int i = 0; i <= 5000; ++i) {
    const double v = i * 0.001;
    if (count_above(r, v) == 1) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  EXPECT_DOUBLE_EQ(lo, 3.0);
  EXPECT_NEAR(hi, 3.999, 1e-12);

  const RootSolution k1 = solve_exceedance({r, 1});
  EXPECT_DOUBLE_EQ(k1.value, 3.5);
  EXPECT_EQ(k1.achieved_count, 1U);
  EXPECT_EQ(count_above(r, k1.value), 1U);
  EXPECT_EQ(k1.bracket.lo, 3.0);
  EXPECT_EQ(k1.bracket.hi, 4.0);

  const RootSolution k0 = solve_exceedance({r, 0});
  EXPECT_EQ(k0.value, 4.0 * kAboveMaxFactor);
  EXPECT_GT(k0.value, 4.0);
  EXPECT_EQ(count_above(r, k0.value), 0U);

  const RootSolution k4 = solve_exceedance({r, 4});
  EXPECT_DOUBLE_EQ(k4.value, 0.5);
  EXPECT_EQ(count_above(r, k4.value), 4U);
}

TEST(Exceedance, TieStraddlingTargetIsError) {
  try {
    solve_exceedance({{1, 2, 2, 4}, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTie);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  // Ties away from the cut are harmless.
  EXPECT_EQ(solve_exceedance({{1, 2, 2, 4}, 1}).achieved_count, 1U);
}

TEST(Exceedance, InvalidProblems) {
  EXPECT_THROW(solve_exceedance({{}, 0}), Error);
  EXPECT_THROW(solve_exceedance({{1.0, -1.0}, 1}), Error);
  EXPECT_THROW(solve_exceedance({{1.0, 0.0}, 1}), Error);
  try {
    solve_exceedance({{1.0, 2.0}, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasibleGamma);
  }
}

TEST(Exceedance, StrictlyDecreasingInTarget) {
  std::mt19937_64 rng(3);
  const auto r = random_ratios(200, rng);
  double prev = INFINITY;
  for (std::size_t k = 0; k <= r.size(); ++k) {
    const double v = solve_exceedance({r, k}).value;
    EXPECT_LT(v, prev) << k;
    prev = v;
  }
}

TEST(Bisection, AgreesOnSmallExamples) {
  const std::vector<double> r{1, 2, 3, 4};
  for (std::size_t k : {0U, 1U, 4U}) {
    const ExceedanceProblem p{r, k};
    const RootSolution s = solve_exceedance(p);
    const RootSolution b = bisect_exceedance(p, 200, default_bracket(p));
    EXPECT_EQ(b.achieved_count, s.achieved_count);
    EXPECT_EQ(count_above(r, b.value), k);
  }
}

TEST(Bisection, FullCountFromZeroBracket) {
  const ExceedanceProblem p{{0.3, 0.7, 1.1}, 3};
  const RootSolution b = bisect_exceedance(p, 200, {0.0, 2.0});
  EXPECT_EQ(b.achieved_count, 3U);
  EXPECT_LT(b.value, 0.3);
}

TEST(Bisection, RandomProblemsHitTarget) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const ExceedanceProblem p{random_ratios(n, rng), rng() % (n + 1)};
    const RootSolution b = bisect_exceedance(p, 400, default_bracket(p));
    ASSERT_EQ(b.achieved_count, p.target_count);
    ASSERT_EQ(count_above(p.ratios, b.value), p.target_count);
  }
}

TEST(Bisection, TieExhaustsIterations) {
  const ExceedanceProblem p{{1, 2, 2, 4}, 2};
  try {
    bisect_exceedance(p, 200, default_bracket(p));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTie);
  }
}

TEST(Bisection, BadBracket) {
  const ExceedanceProblem p{{1, 2, 3}, 1};
  EXPECT_THROW(bisect_exceedance(p, 100, {0.0, 3.0}), Error);
  EXPECT_THROW(bisect_exceedance(p, 100, {-1.0, 6.0}), Error);
}

}  // namespace
}  // namespace pi3nn::rootfind

#include "pi3nn/rootfind.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "pi3nn/error.hpp"

namespace pi3nn::rootfind {
namespace {

std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void validate(const ExceedanceProblem& p) {
  if (p.ratios.empty()) fail(ErrorKind::kArgument, "exceedance problem has no ratios");
  if (p.target_count > p.ratios.size()) {
    fail(ErrorKind::kInfeasibleGamma,
         "target count " + std::to_string(p.target_count) + " exceeds the " +
             std::to_string(p.ratios.size()) + " available samples");
  }
  for (double r : p.ratios) {
    if (!std::isfinite(r) || !(r > 0.0)) {
      fail(ErrorKind::kArgument, "ratios must be finite and strictly positive, got " + show(r));
    }
  }
}

// Value strictly above `top`, also for top <= 0.
double just_above(double top) {
  if (top > 0.0) return top * kAboveMaxFactor;
  return top + std::max(std::abs(top), 1.0) * 0x1p-30;
}

// Midpoint of [lo, hi) that keeps the count exact, or a tie error.
double interior_midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  if (!(lo < hi) || !(mid < hi) || !(mid >= lo)) {
    fail(ErrorKind::kTie, "repeated value " + show(hi) +
                              " straddles the required count; the target cannot be met exactly");
  }
  return mid;
}

}  // namespace

std::size_t count_above(std::span<const double> values, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v > threshold; }));
}

double solve_median_shift(std::span<const double> residuals) {
  if (residuals.empty()) fail(ErrorKind::kArgument, "median shift needs at least one residual");
  for (double r : residuals) {
    if (!std::isfinite(r)) fail(ErrorKind::kData, "residuals must be finite");
  }
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t k = sorted.size() / 2;
  if (k == 0) return just_above(sorted.front());
  return interior_midpoint(sorted[k], sorted[k - 1]);
}

RootSolution solve_exceedance_sorted(std::span<const double> descending, std::size_t k) {
  const std::size_t n = descending.size();
  if (n == 0) fail(ErrorKind::kArgument, "exceedance problem has no ratios");
  if (k > n) {
    fail(ErrorKind::kInfeasibleGamma, "target count " + std::to_string(k) + " exceeds the " +
                                          std::to_string(n) + " available samples");
  }
  RootSolution sol;
  sol.achieved_count = k;
  if (k == 0) {
    sol.bracket = {descending.front(), INFINITY};
    sol.value = descending.front() * kAboveMaxFactor;
  } else if (k == n) {
    sol.bracket = {0.0, descending.back()};
    sol.value = interior_midpoint(0.0, descending.back());
  } else {
    sol.bracket = {descending[k], descending[k - 1]};
    sol.value = interior_midpoint(descending[k], descending[k - 1]);
  }
  return sol;
}

RootSolution solve_exceedance(const ExceedanceProblem& problem) {
  validate(problem);
  std::vector<double> sorted = problem.ratios;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return solve_exceedance_sorted(sorted, problem.target_count);
}

Bracket default_bracket(const ExceedanceProblem& problem) {
  const double top = *std::max_element(problem.ratios.begin(), problem.ratios.end());
  return {0.0, 2.0 * top};
}

RootSolution bisect_exceedance(const ExceedanceProblem& problem, int max_iter, Bracket bracket) {
  validate(problem);
  const double top = *std::max_element(problem.ratios.begin(), problem.ratios.end());
  if (!(bracket.lo >= 0.0) || !(bracket.hi > top)) {
    fail(ErrorKind::kArgument, "bisection bracket must satisfy 0 <= lo and hi > max ratio");
  }
  const std::size_t k = problem.target_count;
  double lo = bracket.lo;
  double hi = bracket.hi;
  // count(lo) >= k >= count(hi) == 0 holds throughout.
  if (count_above(problem.ratios, lo) < k) {
    fail(ErrorKind::kArgument, "bisection bracket lower end already has too few exceedances");
  }
  for (int it = 0; it < max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    const std::size_t c = count_above(problem.ratios, mid);
    if (c == k) return {mid, c, {lo, hi}};
    if (mid <= lo || mid >= hi) break;
    if (c > k) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  fail(ErrorKind::kTie, "bisection could not reach exceedance count " + std::to_string(k) +
                            "; repeated ratio near " + show(lo));
}

}  // namespace pi3nn::rootfind

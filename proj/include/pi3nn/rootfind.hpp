#pragma once

// Roots of integer-valued step functions of one scalar.
//
// Every problem here has the form "find v with #{r_i > v} == k". The count
// is a nonincreasing step function of v, so the root set is the half-open
// order-statistic interval [r_(k+1), r_(k)) of the descending order
// statistics. solve_* returns the midpoint of that interval; bisection is
// kept as an independent check.

#include <cstddef>
#include <span>
#include <vector>

namespace pi3nn::rootfind {

/// Returned when k == 0: max(ratio) scaled just above itself.
inline constexpr double kAboveMaxFactor = 1.0 + 0x1p-30;

struct ExceedanceProblem {
  /// Strictly positive, finite ratios.
  std::vector<double> ratios;
  std::size_t target_count = 0;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct RootSolution {
  double value = 0.0;
  std::size_t achieved_count = 0;
  Bracket bracket;
};

/// #{v_i > threshold}.
std::size_t count_above(std::span<const double> values, double threshold);

/// Median shift: nu with exactly floor(N/2) residuals strictly above it.
double solve_median_shift(std::span<const double> residuals);

RootSolution solve_exceedance(const ExceedanceProblem& problem);

/// Same as solve_exceedance for ratios already sorted in descending order;
/// lets callers solve many target counts against one sort.
RootSolution solve_exceedance_sorted(std::span<const double> descending, std::size_t target_count);

/// Bisection on [bracket.lo, bracket.hi]; stops as soon as the count matches.
RootSolution bisect_exceedance(const ExceedanceProblem& problem, int max_iter, Bracket bracket);

/// Default bisection bracket [0, 2 * max ratio].
Bracket default_bracket(const ExceedanceProblem& problem);

}  // namespace pi3nn::rootfind

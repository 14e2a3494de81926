#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pi3nn/band.hpp"

namespace pi3nn::metrics {

struct CoverageReport {
  double gamma = 0.0;
  double picp = 0.0;
  double mpiw = 0.0;
  Index n = 0;
};

/// Fraction of targets with lower <= y <= upper.
double picp(const IntervalBand& band, const Vector& y);

/// Mean interval width.
double mpiw(const IntervalBand& band);

CoverageReport coverage(const IntervalBand& band, const Vector& y);

inline constexpr std::array<double, 5> kQuantileLevels{0.05, 0.25, 0.5, 0.75, 0.95};

struct Histogram {
  /// bins + 1 increasing edges; the last bin is closed on the right.
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

struct WidthDistribution {
  std::vector<double> widths;  // sorted ascending
  double mean = 0.0;
  double std = 0.0;  // population
  std::array<double, kQuantileLevels.size()> quantiles{};
  Histogram histogram;
};

/// Quantile of ascending data with linear interpolation between order
/// statistics at position p * (n - 1).
double quantile_sorted(std::span<const double> ascending, double p);

/// Equal-width histogram over [min, max]. When every value is equal the
/// edges collapse to that value and all samples land in bin 0.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

WidthDistribution width_distribution(std::span<const double> widths, std::size_t bins);
WidthDistribution width_distribution(const IntervalBand& band, std::size_t bins);

struct SeparationReport {
  /// mean OOD width / mean InD width.
  double mean_ratio = 0.0;
  /// Overlap coefficient sum_i min(p_i, q_i) of the two normalized
  /// histograms on a shared grid: 1 for identical, 0 for disjoint.
  double overlap = 0.0;
  double threshold = 1.5;
  bool separated = false;
};

inline constexpr double kDefaultSeparationThreshold = 1.5;

SeparationReport separation_report(const WidthDistribution& ind, const WidthDistribution& ood,
                                   double threshold = kDefaultSeparationThreshold);

void to_json(nlohmann::json& j, const CoverageReport& r);
void to_json(nlohmann::json& j, const WidthDistribution& d);
void to_json(nlohmann::json& j, const SeparationReport& r);

/// bin_left,bin_right,count
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);

}  // namespace pi3nn::metrics

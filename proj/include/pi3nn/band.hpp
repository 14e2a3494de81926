#pragma once

#include <filesystem>

#include "pi3nn/types.hpp"

namespace pi3nn {

/// Prediction intervals for one confidence level over M inputs, in original
/// target units.
struct IntervalBand {
  double gamma = 0.0;
  Vector lower;
  Vector upper;
  /// Mean-network prediction f(x).
  Vector point_mean;
  /// f(x) + nu, the center the interval is built around.
  Vector point_median;
  /// upper - lower.
  Vector width;

  Index size() const { return width.size(); }
};

/// Plot-ready CSV: x columns, optional y, then lower, upper, point, width.
/// `point` is the mean-network prediction.
void write_band_csv(const std::filesystem::path& path, const IntervalBand& band, const Matrix& x,
                    const Vector* y = nullptr);

}  // namespace pi3nn

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pi3nn/types.hpp"

namespace pi3nn::data {

/// N x d inputs paired row-wise with N targets.
struct Dataset {
  Matrix x;
  Vector y;
  std::vector<std::string> feature_names;

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  /// Throws kShape / kData unless N >= 1, d >= 1, lengths agree and every
  /// entry is finite.
  void validate() const;
};

/// Column statistics used for standardization. Standard deviations follow
/// the population convention (divide by N).
struct NormStats {
  Vector x_mean;
  Vector x_std;
  double y_mean = 0.0;
  double y_std = 1.0;
};

NormStats compute_norm_stats(const Dataset& ds);

/// Standardizes `ds` with its own statistics. Constant columns are rejected.
std::pair<Dataset, NormStats> normalize(const Dataset& ds);

Dataset apply_normalization(const Dataset& ds, const NormStats& stats);
Dataset denormalize(const Dataset& ds, const NormStats& stats);

Matrix normalize_inputs(const Matrix& x, const NormStats& stats);
Vector normalize_targets(const Vector& y, const NormStats& stats);
Vector denormalize_targets(const Vector& y, const NormStats& stats);

Dataset subset(const Dataset& ds, std::span<const Index> rows);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Index> train_idx;
  std::vector<Index> test_idx;
};

/// Seeded random partition; the test part holds round(N * test_fraction)
/// rows, clamped to [1, N - 1].
Split split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Reads a headered, comma-separated file. `target` names the target column
/// or, when it is not a header name, gives its zero-based index.
Dataset load_csv(const std::filesystem::path& path, std::string_view target);

/// Writes features followed by a target column named `target_name`.
void save_csv(const Dataset& ds, const std::filesystem::path& path,
              std::string_view target_name = "y");

struct NoiseSpec {
  enum class Kind { kNone, kGaussian, kAsymmetric };

  Kind kind = Kind::kGaussian;
  double sigma = 1.0;
  /// eps = s(zeta) * zeta with s = scale_pos for zeta >= 0, scale_neg otherwise.
  double scale_pos = 30.0;
  double scale_neg = 10.0;

  static NoiseSpec none() { return {Kind::kNone, 0.0, 0.0, 0.0}; }
  static NoiseSpec gaussian(double sigma) { return {Kind::kGaussian, sigma, 0.0, 0.0}; }
  static NoiseSpec asymmetric(double pos = 30.0, double neg = 10.0) {
    return {Kind::kAsymmetric, 0.0, pos, neg};
  }

  void validate() const;
};

struct Range {
  double lo;
  double hi;
};

/// y = x^3 + eps with x uniform on each range. Returns (train, test).
std::pair<Dataset, Dataset> gen_cubic_1d(Index n_train, Index n_test, Range train_range,
                                         Range test_range, const NoiseSpec& noise,
                                         std::uint64_t seed);

inline constexpr Index kCubic10dDim = 10;

/// y = (x_1^3 + ... + x_10^3) / 10 + eps, x ~ N(input_mean, 1) per coordinate.
Dataset gen_cubic_10d(Index n, double input_mean, std::uint64_t seed,
                      const NoiseSpec& noise = NoiseSpec::gaussian(1.0));

}  // namespace pi3nn::data

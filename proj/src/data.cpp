#include "pi3nn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pi3nn/error.hpp"
#include "text.hpp"

namespace pi3nn::data {
namespace {

using detail::format_double;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void check_range(Range r, const char* what) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi)) {
    fail(ErrorKind::kArgument, std::string("invalid ") + what + " range");
  }
}

template <typename Rng>
double draw_noise(const NoiseSpec& spec, Rng& rng) {
  std::normal_distribution<double> standard(0.0, 1.0);
  switch (spec.kind) {
    case NoiseSpec::Kind::kNone:
      return 0.0;
    case NoiseSpec::Kind::kGaussian:
      return spec.sigma * standard(rng);
    case NoiseSpec::Kind::kAsymmetric: {
      const double zeta = standard(rng);
      return (zeta >= 0.0 ? spec.scale_pos : spec.scale_neg) * zeta;
    }
  }
  return 0.0;
}

template <typename Rng>
Dataset cubic_1d(Index n, Range range, const NoiseSpec& noise, Rng& rng) {
  std::uniform_real_distribution<double> ux(range.lo, range.hi);
  Dataset ds{Matrix(n, 1), Vector(n), {"x"}};
  for (Index i = 0; i < n; ++i) {
    const double x = ux(rng);
    ds.x(i, 0) = x;
    ds.y(i) = x * x * x + draw_noise(noise, rng);
  }
  return ds;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) fail(ErrorKind::kShape, "dataset must have N >= 1 and d >= 1");
  if (x.rows() != y.size()) fail(ErrorKind::kShape, "inputs and targets differ in length");
  if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != x.cols()) {
    fail(ErrorKind::kShape, "feature_names does not match the input dimension");
  }
  if (!x.allFinite() || !y.allFinite()) fail(ErrorKind::kData, "dataset contains NaN or Inf");
}

void NoiseSpec::validate() const {
  switch (kind) {
    case Kind::kNone:
      return;
    case Kind::kGaussian:
      if (!(sigma > 0.0)) fail(ErrorKind::kArgument, "noise sigma must be positive");
      return;
    case Kind::kAsymmetric:
      if (!(scale_pos > 0.0) || !(scale_neg > 0.0)) {
        fail(ErrorKind::kArgument, "noise scales must be positive");
      }
      return;
  }
}

NormStats compute_norm_stats(const Dataset& ds) {
  ds.validate();
  const double n = static_cast<double>(ds.size());
  NormStats stats;
  stats.x_mean = ds.x.colwise().mean().transpose();
  stats.x_std.resize(ds.dim());
  for (Index c = 0; c < ds.dim(); ++c) {
    const double var = (ds.x.col(c).array() - stats.x_mean(c)).square().sum() / n;
    stats.x_std(c) = std::sqrt(var);
    if (!(stats.x_std(c) > 0.0)) {
      const std::string name =
          ds.feature_names.empty() ? std::to_string(c) : ds.feature_names[static_cast<std::size_t>(c)];
      fail(ErrorKind::kNormalization, "feature column '" + name + "' is constant");
    }
  }
  stats.y_mean = ds.y.mean();
  stats.y_std = std::sqrt((ds.y.array() - stats.y_mean).square().sum() / n);
  if (!(stats.y_std > 0.0)) fail(ErrorKind::kNormalization, "target column is constant");
  return stats;
}

Matrix normalize_inputs(const Matrix& x, const NormStats& stats) {
  if (x.cols() != stats.x_mean.size()) fail(ErrorKind::kShape, "input dimension mismatch");
  Matrix out = x;
  out.rowwise() -= stats.x_mean.transpose();
  out.array().rowwise() /= stats.x_std.transpose().array();
  return out;
}

Vector normalize_targets(const Vector& y, const NormStats& stats) {
  return ((y.array() - stats.y_mean) / stats.y_std).matrix();
}

Vector denormalize_targets(const Vector& y, const NormStats& stats) {
  return (y.array() * stats.y_std + stats.y_mean).matrix();
}

Dataset apply_normalization(const Dataset& ds, const NormStats& stats) {
  return {normalize_inputs(ds.x, stats), normalize_targets(ds.y, stats), ds.feature_names};
}

Dataset denormalize(const Dataset& ds, const NormStats& stats) {
  if (ds.x.cols() != stats.x_mean.size()) fail(ErrorKind::kShape, "input dimension mismatch");
  Matrix x = ds.x;
  x.array().rowwise() *= stats.x_std.transpose().array();
  x.rowwise() += stats.x_mean.transpose();
  return {std::move(x), denormalize_targets(ds.y, stats), ds.feature_names};
}

std::pair<Dataset, NormStats> normalize(const Dataset& ds) {
  NormStats stats = compute_norm_stats(ds);
  return {apply_normalization(ds, stats), std::move(stats)};
}

Dataset subset(const Dataset& ds, std::span<const Index> rows) {
  const auto n = static_cast<Index>(rows.size());
  Dataset out{Matrix(n, ds.dim()), Vector(n), ds.feature_names};
  for (Index i = 0; i < n; ++i) {
    const Index src = rows[static_cast<std::size_t>(i)];
    if (src < 0 || src >= ds.size()) fail(ErrorKind::kArgument, "row index out of range");
    out.x.row(i) = ds.x.row(src);
    out.y(i) = ds.y(src);
  }
  return out;
}

Split split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::kArgument, "test_fraction must lie in (0, 1)");
  }
  const Index n = ds.size();
  if (n < 2) fail(ErrorKind::kArgument, "cannot split a dataset with fewer than 2 rows");
  const Index n_test =
      std::clamp<Index>(std::llround(static_cast<double>(n) * test_fraction), 1, n - 1);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split out;
  out.test_idx.assign(order.begin(), order.begin() + n_test);
  out.train_idx.assign(order.begin() + n_test, order.end());
  std::sort(out.test_idx.begin(), out.test_idx.end());
  std::sort(out.train_idx.begin(), out.train_idx.end());
  out.train = subset(ds, out.train_idx);
  out.test = subset(ds, out.test_idx);
  return out;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kData, "'" + path.string() + "' has no header row");
  const auto header_views = split_fields(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());

  std::size_t target_col = header.size();
  if (const auto it = std::find(header.begin(), header.end(), target); it != header.end()) {
    target_col = static_cast<std::size_t>(it - header.begin());
  } else {
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(target.data(), target.data() + target.size(), idx);
    if (ec == std::errc() && ptr == target.data() + target.size() && idx < header.size()) {
      target_col = idx;
    }
  }
  if (target_col == header.size()) {
    fail(ErrorKind::kData, "target column '" + std::string(target) + "' not found");
  }
  if (header.size() < 2) fail(ErrorKind::kData, "need at least one feature column");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail(ErrorKind::kData, "row " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(header.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], values[c]) || !std::isfinite(values[c])) {
        fail(ErrorKind::kData, "non-numeric cell '" + std::string(fields[c]) + "' at row " +
                                   std::to_string(line_no) + ", column '" + header[c] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(ErrorKind::kData, "'" + path.string() + "' has no data rows");

  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(header.size() - 1);
  Dataset ds{Matrix(n, d), Vector(n), {}};
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_col) ds.feature_names.push_back(header[c]);
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    Index col = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == target_col) {
        ds.y(i) = row[c];
      } else {
        ds.x(i, col++) = row[c];
      }
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view target_name) {
  ds.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  for (Index c = 0; c < ds.dim(); ++c) {
    out << (ds.feature_names.empty() ? "x" + std::to_string(c)
                                     : ds.feature_names[static_cast<std::size_t>(c)])
        << ',';
  }
  out << target_name << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index c = 0; c < ds.dim(); ++c) out << format_double(ds.x(i, c)) << ',';
    out << format_double(ds.y(i)) << '\n';
  }
}

std::pair<Dataset, Dataset> gen_cubic_1d(Index n_train, Index n_test, Range train_range,
                                         Range test_range, const NoiseSpec& noise,
                                         std::uint64_t seed) {
  if (n_train < 1 || n_test < 1) fail(ErrorKind::kArgument, "sample counts must be positive");
  check_range(train_range, "training");
  check_range(test_range, "test");
  noise.validate();
  std::mt19937_64 rng(seed);
  Dataset train = cubic_1d(n_train, train_range, noise, rng);
  Dataset test = cubic_1d(n_test, test_range, noise, rng);
  return {std::move(train), std::move(test)};
}

Dataset gen_cubic_10d(Index n, double input_mean, std::uint64_t seed, const NoiseSpec& noise) {
  if (n < 1) fail(ErrorKind::kArgument, "sample count must be positive");
  if (!std::isfinite(input_mean)) fail(ErrorKind::kArgument, "input_mean must be finite");
  noise.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> ux(input_mean, 1.0);
  Dataset ds{Matrix(n, kCubic10dDim), Vector(n), {}};
  for (Index c = 0; c < kCubic10dDim; ++c) ds.feature_names.push_back("x" + std::to_string(c + 1));
  for (Index i = 0; i < n; ++i) {
    double f = 0.0;
    for (Index c = 0; c < kCubic10dDim; ++c) {
      const double x = ux(rng);
      ds.x(i, c) = x;
      f += x * x * x;
    }
    ds.y(i) = f / 10.0 + draw_noise(noise, rng);
  }
  return ds;
}

}  // namespace pi3nn::data

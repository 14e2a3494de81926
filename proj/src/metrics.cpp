#include "pi3nn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "pi3nn/error.hpp"
#include "text.hpp"

namespace pi3nn::metrics {
namespace {

std::vector<double> normalized_counts(const Histogram& h) {
  const double total = static_cast<double>(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}));
  std::vector<double> p(h.counts.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(h.counts[i]) / total;
  return p;
}

}  // namespace

double picp(const IntervalBand& band, const Vector& y) {
  if (y.size() != band.size()) {
    fail(ErrorKind::kShape, "band has " + std::to_string(band.size()) + " entries but targets have " +
                                std::to_string(y.size()));
  }
  if (y.size() == 0) fail(ErrorKind::kArgument, "empty band");
  Index inside = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (band.lower(i) <= y(i) && y(i) <= band.upper(i)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

double mpiw(const IntervalBand& band) {
  if (band.size() == 0) fail(ErrorKind::kArgument, "empty band");
  return band.width.mean();
}

CoverageReport coverage(const IntervalBand& band, const Vector& y) {
  return {band.gamma, picp(band, y), mpiw(band), band.size()};
}

double quantile_sorted(std::span<const double> a, double p) {
  if (a.empty()) fail(ErrorKind::kArgument, "quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kArgument, "quantile level must lie in [0, 1]");
  const double pos = p * static_cast<double>(a.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, a.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return a[lo] + frac * (a[hi] - a[lo]);
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) fail(ErrorKind::kArgument, "histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  const double span = hi - lo;
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + span * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.edges.back() = hi;
  for (double v : values) {
    std::size_t b = 0;
    if (span > 0.0) {
      const double pos = (v - lo) / span * static_cast<double>(bins);
      b = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(bins - 1)));
    }
    ++h.counts[b];
  }
  return h;
}

WidthDistribution width_distribution(std::span<const double> widths, std::size_t bins) {
  if (widths.empty()) fail(ErrorKind::kArgument, "width distribution of an empty set");
  if (bins == 0) fail(ErrorKind::kArgument, "histogram needs at least one bin");
  WidthDistribution d;
  d.widths.assign(widths.begin(), widths.end());
  std::sort(d.widths.begin(), d.widths.end());
  const double n = static_cast<double>(d.widths.size());
  d.mean = std::accumulate(d.widths.begin(), d.widths.end(), 0.0) / n;
  double ss = 0.0;
  for (double w : d.widths) ss += (w - d.mean) * (w - d.mean);
  d.std = std::sqrt(ss / n);
  for (std::size_t q = 0; q < kQuantileLevels.size(); ++q) {
    d.quantiles[q] = quantile_sorted(d.widths, kQuantileLevels[q]);
  }
  d.histogram = histogram(d.widths, bins, d.widths.front(), d.widths.back());
  return d;
}

WidthDistribution width_distribution(const IntervalBand& band, std::size_t bins) {
  return width_distribution(std::span<const double>(band.width.data(), band.width.size()), bins);
}

SeparationReport separation_report(const WidthDistribution& ind, const WidthDistribution& ood,
                                   double threshold) {
  if (ind.widths.empty() || ood.widths.empty()) {
    fail(ErrorKind::kArgument, "separation report needs two nonempty distributions");
  }
  SeparationReport r;
  r.threshold = threshold;
  r.mean_ratio = ind.mean > 0.0 ? ood.mean / ind.mean : (ood.mean > 0.0 ? INFINITY : 1.0);

  const std::size_t bins = std::max(ind.histogram.counts.size(), ood.histogram.counts.size());
  const double lo = std::min(ind.widths.front(), ood.widths.front());
  const double hi = std::max(ind.widths.back(), ood.widths.back());
  const auto p = normalized_counts(histogram(ind.widths, bins, lo, hi));
  const auto q = normalized_counts(histogram(ood.widths, bins, lo, hi));
  for (std::size_t i = 0; i < bins; ++i) r.overlap += std::min(p[i], q[i]);
  r.overlap = std::min(r.overlap, 1.0);
  r.separated = r.mean_ratio > threshold;
  return r;
}

void to_json(nlohmann::json& j, const CoverageReport& r) {
  j = nlohmann::json{{"gamma", r.gamma}, {"picp", r.picp}, {"mpiw", r.mpiw}, {"n", r.n}};
}

void to_json(nlohmann::json& j, const WidthDistribution& d) {
  nlohmann::json q = nlohmann::json::object();
  for (std::size_t i = 0; i < kQuantileLevels.size(); ++i) {
    q[detail::format_double(kQuantileLevels[i])] = d.quantiles[i];
  }
  j = nlohmann::json{{"n", d.widths.size()},
                     {"mean", d.mean},
                     {"std", d.std},
                     {"quantiles", q},
                     {"histogram", {{"edges", d.histogram.edges}, {"counts", d.histogram.counts}}}};
}

void to_json(nlohmann::json& j, const SeparationReport& r) {
  j = nlohmann::json{{"mean_ratio", r.mean_ratio},
                     {"overlap", r.overlap},
                     {"threshold", r.threshold},
                     {"separated", r.separated}};
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << detail::format_double(h.edges[i]) << ',' << detail::format_double(h.edges[i + 1]) << ','
        << h.counts[i] << '\n';
  }
}

}  // namespace pi3nn::metrics

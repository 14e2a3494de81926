#include "pi3nn/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "pi3nn/error.hpp"
#include "pi3nn/rootfind.hpp"
#include "text.hpp"

namespace pi3nn {
namespace {

// Network outputs in normalized target space.
struct Components {
  Vector f;
  Vector u;
  Vector l;
};

Components evaluate(const TrainedTriplet& t, const Matrix& x_normalized) {
  return {nnet::forward(t.f, x_normalized), nnet::forward(t.u, x_normalized),
          nnet::forward(t.l, x_normalized)};
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    fail(ErrorKind::kArgument, "confidence level " + detail::format_double(gamma) +
                                   " is outside (0, 1)");
  }
}

data::Dataset rows_of(const Matrix& x, const Vector& y, std::span<const Index> rows) {
  return data::subset(data::Dataset{x, y, {}}, rows);
}

nnet::MlpSpec network_spec(const nnet::MlpSpec& base, Index dim, bool positive, std::uint64_t stream) {
  nnet::MlpSpec s = base;
  s.input_dim = dim;
  s.output_positivity = positive;
  s.seed = derive_seed(base.seed, stream);
  return s;
}

nnet::TrainConfig network_cfg(const nnet::TrainConfig& base, std::uint64_t stream) {
  nnet::TrainConfig c = base;
  c.seed = derive_seed(base.seed, stream);
  return c;
}

// Sorted (descending) ratios (distance beyond the median) / (scale network).
std::vector<double> sorted_ratios(std::span<const Index> idx, const Vector& distance,
                                  const Vector& scale, const char* side) {
  std::vector<double> ratios;
  ratios.reserve(idx.size());
  for (Index i : idx) {
    const double d = distance(i);
    const double s = scale(i);
    if (!(d > 0.0)) {
      fail(ErrorKind::kTie, std::string(side) + " sample " + std::to_string(i) +
                                " lies on the shifted median; data or triplet mismatch");
    }
    if (!(s > 0.0)) {
      fail(ErrorKind::kDivergence, std::string(side) + " network output is zero at sample " +
                                       std::to_string(i));
    }
    ratios.push_back(d / s);
  }
  std::sort(ratios.begin(), ratios.end(), std::greater<>());
  return ratios;
}

}  // namespace

void OodConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::kArgument, "OOD factor c must be positive");
  if (pretrain_epochs < 0) fail(ErrorKind::kArgument, "pretrain_epochs must be nonnegative");
}

std::size_t exceedance_target(std::size_t n, double gamma) {
  check_gamma(gamma);
  const double x = static_cast<double>(n) * (1.0 - gamma) / 2.0;
  const double nearest = std::nearbyint(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

TrainedTriplet fit(const data::Dataset& train, const nnet::MlpSpec& spec,
                   const nnet::TrainConfig& cfg, const OodConfig& ood,
                   FitDiagnostics* diagnostics) {
  train.validate();
  spec.validate();
  cfg.validate();
  ood.validate();
  if (train.size() < 2) fail(ErrorKind::kData, "need at least 2 training samples");

  FitDiagnostics local;
  FitDiagnostics& diag = diagnostics != nullptr ? *diagnostics : local;

  TrainedTriplet t;
  t.norm = data::compute_norm_stats(train);
  const Matrix x = data::normalize_inputs(train.x, t.norm);
  const Vector y = data::normalize_targets(train.y, t.norm);
  const Index dim = train.dim();

  // Mean network.
  t.f = nnet::train_mse(nnet::init_model(network_spec(spec, dim, false, 0)), x, y,
                        network_cfg(cfg, 0), &diag.f_log);

  // Median shift and the upper/lower split.
  const Vector residual = y - nnet::forward(t.f, x);
  t.nu = rootfind::solve_median_shift(std::span<const double>(residual.data(), residual.size()));
  for (Index i = 0; i < train.size(); ++i) {
    (residual(i) >= t.nu ? t.d_upper_idx : t.d_lower_idx).push_back(i);
  }
  if (t.d_upper_idx.empty() || t.d_lower_idx.empty()) {
    fail(ErrorKind::kData, "degenerate split: one side of the shifted median is empty");
  }

  const Vector upper_target = residual.array() - t.nu;
  const Vector lower_target = t.nu - residual.array();
  const data::Dataset upper = rows_of(x, upper_target, t.d_upper_idx);
  const data::Dataset lower = rows_of(x, lower_target, t.d_lower_idx);

  const nnet::MlpSpec u_spec = network_spec(spec, dim, true, 1);
  const nnet::MlpSpec l_spec = network_spec(spec, dim, true, 2);
  nnet::TrainConfig u_cfg = network_cfg(cfg, 1);
  nnet::TrainConfig l_cfg = network_cfg(cfg, 2);

  if (!ood.enabled) {
    t.u = nnet::train_mse(nnet::init_model(u_spec), upper.x, upper.y, u_cfg, &diag.u_log);
    t.l = nnet::train_mse(nnet::init_model(l_spec), lower.x, lower.y, l_cfg, &diag.l_log);
  } else {
    if (ood.pretrain_epochs > 0) {
      u_cfg.epochs = ood.pretrain_epochs;
      l_cfg.epochs = ood.pretrain_epochs;
    }
    const nnet::MlpModel u_pre = nnet::train_mse(nnet::init_model(u_spec), upper.x, upper.y, u_cfg);
    const nnet::MlpModel l_pre = nnet::train_mse(nnet::init_model(l_spec), lower.x, lower.y, l_cfg);
    // Means run over every training input, not only each network's half.
    diag.mu_upper = nnet::mean_output(u_pre, x);
    diag.mu_lower = nnet::mean_output(l_pre, x);
    const nnet::MlpModel u_init = nnet::set_output_bias(nnet::init_model(u_spec), ood.c * diag.mu_upper);
    const nnet::MlpModel l_init = nnet::set_output_bias(nnet::init_model(l_spec), ood.c * diag.mu_lower);
    t.u = nnet::train_mse(u_init, upper.x, upper.y, u_cfg, &diag.u_log);
    t.l = nnet::train_mse(l_init, lower.x, lower.y, l_cfg, &diag.l_log);
  }
  return t;
}

std::vector<GammaSolution> solve_gammas(const TrainedTriplet& t, const data::Dataset& train,
                                        std::span<const double> gammas) {
  train.validate();
  const std::size_t n = t.n_train();
  if (static_cast<std::size_t>(train.size()) != n) {
    fail(ErrorKind::kShape, "training set has " + std::to_string(train.size()) +
                                " rows but the triplet was fitted on " + std::to_string(n));
  }
  for (double g : gammas) check_gamma(g);

  const Matrix x = data::normalize_inputs(train.x, t.norm);
  const Vector y = data::normalize_targets(train.y, t.norm);
  const Components c = evaluate(t, x);
  const Vector above = y - c.f - Vector::Constant(y.size(), t.nu);
  const Vector below = -above;

  const std::vector<double> upper_ratios = sorted_ratios(t.d_upper_idx, above, c.u, "upper");
  const std::vector<double> lower_ratios = sorted_ratios(t.d_lower_idx, below, c.l, "lower");

  std::vector<GammaSolution> out;
  out.reserve(gammas.size());
  for (double gamma : gammas) {
    const std::size_t k = exceedance_target(n, gamma);
    if (k > upper_ratios.size() || k > lower_ratios.size()) {
      fail(ErrorKind::kInfeasibleGamma,
           "gamma " + detail::format_double(gamma) + " needs " + std::to_string(k) +
               " exceedances per side but the smaller half holds only " +
               std::to_string(std::min(upper_ratios.size(), lower_ratios.size())) + " samples");
    }
    GammaSolution s;
    s.gamma = gamma;
    s.target_count = k;
    s.alpha = rootfind::solve_exceedance_sorted(upper_ratios, k).value;
    s.beta = rootfind::solve_exceedance_sorted(lower_ratios, k).value;

    // The bound itself, not just the ratio, must leave exactly k samples out.
    std::size_t up = 0;
    std::size_t down = 0;
    for (Index i : t.d_upper_idx) up += y(i) > c.f(i) + t.nu + s.alpha * c.u(i) ? 1 : 0;
    for (Index i : t.d_lower_idx) down += y(i) < c.f(i) + t.nu - s.beta * c.l(i) ? 1 : 0;
    if (up != k || down != k) {
      fail(ErrorKind::kTie, "gamma " + detail::format_double(gamma) +
                                ": bound evaluation cannot separate neighbouring samples");
    }
    out.push_back(s);
  }
  return out;
}

IntervalBand predict_interval(const TrainedTriplet& t, const GammaSolution& s, const Matrix& x) {
  const std::vector<GammaSolution> one{s};
  return std::move(predict_intervals(t, one, x).front());
}

std::vector<IntervalBand> predict_intervals(const TrainedTriplet& t,
                                            std::span<const GammaSolution> solutions,
                                            const Matrix& x) {
  if (x.cols() != t.norm.x_mean.size()) {
    fail(ErrorKind::kShape, "input has " + std::to_string(x.cols()) + " columns, triplet expects " +
                                std::to_string(t.norm.x_mean.size()));
  }
  const Components c = evaluate(t, data::normalize_inputs(x, t.norm));
  const Vector median = c.f.array() + t.nu;
  const Vector point_mean = data::denormalize_targets(c.f, t.norm);
  const Vector point_median = data::denormalize_targets(median, t.norm);

  std::vector<IntervalBand> out;
  out.reserve(solutions.size());
  for (const GammaSolution& s : solutions) {
    IntervalBand band;
    band.gamma = s.gamma;
    band.upper = data::denormalize_targets(median + s.alpha * c.u, t.norm);
    band.lower = data::denormalize_targets(median - s.beta * c.l, t.norm);
    band.point_mean = point_mean;
    band.point_median = point_median;
    band.width = band.upper - band.lower;
    out.push_back(std::move(band));
  }
  return out;
}

Vector confidence_scores(const TrainedTriplet& t, const GammaSolution& s,
                         const data::Dataset& train, const Matrix& x) {
  const double train_mpiw = predict_interval(t, s, train.x).width.mean();
  const Vector width = predict_interval(t, s, x).width;
  Vector score(width.size());
  for (Index i = 0; i < width.size(); ++i) {
    score(i) = width(i) > 0.0 ? std::min(train_mpiw / width(i), 1.0) : 1.0;
  }
  return score;
}

void to_json(nlohmann::json& j, const TrainedTriplet& t) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j = nlohmann::json{
      {"f", t.f},
      {"nu", t.nu},
      {"u", t.u},
      {"l", t.l},
      {"norm",
       {{"x_mean", vec(t.norm.x_mean)},
        {"x_std", vec(t.norm.x_std)},
        {"y_mean", t.norm.y_mean},
        {"y_std", t.norm.y_std}}},
      {"d_upper_idx", t.d_upper_idx},
      {"d_lower_idx", t.d_lower_idx},
  };
}

void from_json(const nlohmann::json& j, TrainedTriplet& t) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  };
  j.at("f").get_to(t.f);
  j.at("nu").get_to(t.nu);
  j.at("u").get_to(t.u);
  j.at("l").get_to(t.l);
  const auto& norm = j.at("norm");
  t.norm.x_mean = vec(norm.at("x_mean"));
  t.norm.x_std = vec(norm.at("x_std"));
  norm.at("y_mean").get_to(t.norm.y_mean);
  norm.at("y_std").get_to(t.norm.y_std);
  j.at("d_upper_idx").get_to(t.d_upper_idx);
  j.at("d_lower_idx").get_to(t.d_lower_idx);
  if (t.norm.x_mean.size() != t.f.spec.input_dim || t.norm.x_std.size() != t.f.spec.input_dim) {
    fail(ErrorKind::kShape, "normalization statistics do not match the network input dimension");
  }
}

void save_triplet(const TrainedTriplet& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << nlohmann::json(t).dump(1) << '\n';
}

TrainedTriplet load_triplet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, "malformed triplet file '" + path.string() + "': " + e.what());
  }
  return j.get<TrainedTriplet>();
}

void write_band_csv(const std::filesystem::path& path, const IntervalBand& band, const Matrix& x,
                    const Vector* y) {
  if (x.rows() != band.size() || (y != nullptr && y->size() != band.size())) {
    fail(ErrorKind::kShape, "band, inputs and targets differ in length");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  for (Index c = 0; c < x.cols(); ++c) out << 'x' << c << ',';
  if (y != nullptr) out << "y,";
  out << "lower,upper,point,width\n";
  for (Index i = 0; i < band.size(); ++i) {
    for (Index c = 0; c < x.cols(); ++c) out << detail::format_double(x(i, c)) << ',';
    if (y != nullptr) out << detail::format_double((*y)(i)) << ',';
    out << detail::format_double(band.lower(i)) << ',' << detail::format_double(band.upper(i))
        << ',' << detail::format_double(band.point_mean(i)) << ','
        << detail::format_double(band.width(i)) << '\n';
  }
}

}  // namespace pi3nn

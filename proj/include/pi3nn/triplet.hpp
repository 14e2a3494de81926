#pragma once

// Three-network prediction intervals.
//
//   f  mean network, trained on all samples;
//   nu scalar shift so that exactly floor(N/2) targets lie above f + nu;
//   u  upper residual network, trained on samples with y >= f + nu;
//   l  lower residual network, trained on samples with y <  f + nu.
//
// For confidence level gamma the interval is
//   [f + nu - beta(gamma) * l,  f + nu + alpha(gamma) * u]
// where alpha, beta make exactly ceil(N (1 - gamma) / 2) training targets
// fall above / below the bounds. N is the full training-set size while the
// counting runs over each half. Networks are trained once; any number of
// confidence levels are solved afterwards without touching them.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pi3nn/band.hpp"
#include "pi3nn/data.hpp"
#include "pi3nn/nnet.hpp"

namespace pi3nn {

/// Output-bias initialization that widens intervals away from the training
/// data. When enabled, u and l are pretrained, their mean output over all
/// training inputs is measured, and they are retrained from a fresh
/// initialization whose output bias is c times that mean.
struct OodConfig {
  bool enabled = false;
  double c = 10.0;
  /// Epochs for pretraining and for the retraining pass; 0 uses the
  /// TrainConfig epoch count.
  int pretrain_epochs = 0;

  void validate() const;
};

struct TrainedTriplet {
  nnet::MlpModel f;
  double nu = 0.0;
  nnet::MlpModel u;
  nnet::MlpModel l;
  data::NormStats norm;
  std::vector<Index> d_upper_idx;
  std::vector<Index> d_lower_idx;

  std::size_t n_train() const { return d_upper_idx.size() + d_lower_idx.size(); }
};

/// Extra quantities observed while fitting (for reports and tests).
struct FitDiagnostics {
  double mu_upper = 0.0;
  double mu_lower = 0.0;
  nnet::TrainLog f_log;
  nnet::TrainLog u_log;
  nnet::TrainLog l_log;
};

struct GammaSolution {
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t target_count = 0;
};

/// ceil(n (1 - gamma) / 2), with products within 1e-9 of an integer snapped
/// to it first so that e.g. n = 1000, gamma = 0.95 gives 25 and not 26.
std::size_t exceedance_target(std::size_t n, double gamma);

/// Runs the three training steps on `train` (original units). `spec.input_dim`
/// and `spec.output_positivity` are overridden per network; seeds for the
/// three networks are derived from spec.seed and cfg.seed.
TrainedTriplet fit(const data::Dataset& train, const nnet::MlpSpec& spec,
                   const nnet::TrainConfig& cfg, const OodConfig& ood,
                   FitDiagnostics* diagnostics = nullptr);

std::vector<GammaSolution> solve_gammas(const TrainedTriplet& triplet, const data::Dataset& train,
                                        std::span<const double> gammas);

IntervalBand predict_interval(const TrainedTriplet& triplet, const GammaSolution& solution,
                              const Matrix& x);

std::vector<IntervalBand> predict_intervals(const TrainedTriplet& triplet,
                                            std::span<const GammaSolution> solutions,
                                            const Matrix& x);

/// min(MPIW over the training inputs / PIW(x), 1); a zero-width interval
/// scores 1.
Vector confidence_scores(const TrainedTriplet& triplet, const GammaSolution& solution,
                         const data::Dataset& train, const Matrix& x);

void to_json(nlohmann::json& j, const TrainedTriplet& triplet);
void from_json(const nlohmann::json& j, TrainedTriplet& triplet);

void save_triplet(const TrainedTriplet& triplet, const std::filesystem::path& path);
TrainedTriplet load_triplet(const std::filesystem::path& path);

}  // namespace pi3nn

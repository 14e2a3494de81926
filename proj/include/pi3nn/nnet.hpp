#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pi3nn/types.hpp"

namespace pi3nn::nnet {

/// Architecture and regularization of a dense ReLU network with one scalar
/// output. When `output_positivity` is set the output is |z| of the last
/// affine layer.
struct MlpSpec {
  Index input_dim = 1;
  std::vector<Index> hidden_widths{100};
  bool output_positivity = false;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One affine layer: weights are (outputs x inputs), row-major.
struct DenseLayer {
  Matrix weights;
  Vector bias;
};

struct MlpModel {
  MlpSpec spec;
  /// Hidden layers followed by the scalar output layer.
  std::vector<DenseLayer> layers;

  void validate() const;
  std::size_t parameter_count() const;
};

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 1000;
  /// 0 selects full-batch training.
  Index batch_size = 0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;

  void validate() const;
};

/// Per-epoch objective values (MSE plus penalties) observed during training.
struct TrainLog {
  std::vector<double> loss;
};

/// Fan-in scaled uniform weights, zero biases, drawn from `spec.seed`.
MlpModel init_model(const MlpSpec& spec);

double forward(const MlpModel& model, std::span<const double> x);
Vector forward(const MlpModel& model, const Matrix& x);

/// Mean squared error of the data term only.
double mse(const MlpModel& model, const Matrix& x, const Vector& y);

/// MSE + l1 * sum|W| + l2 * sum W^2 over weight matrices (biases unpenalized).
double objective(const MlpModel& model, const Matrix& x, const Vector& y);

struct Gradient {
  double objective = 0.0;
  std::vector<DenseLayer> layers;
};

/// Analytic gradient of `objective` with respect to every parameter.
Gradient objective_gradient(const MlpModel& model, const Matrix& x, const Vector& y);

MlpModel train_mse(const MlpModel& model, const Matrix& x, const Vector& y,
                   const TrainConfig& cfg, TrainLog* log = nullptr);

MlpModel set_output_bias(MlpModel model, double value);

double mean_output(const MlpModel& model, const Matrix& x);

/// FNV-1a over the raw bytes of every parameter; used to detect mutation.
std::uint64_t parameter_hash(const MlpModel& model);

/// Flattened parameter access in layer order (weights row-major, then bias).
std::vector<double> flatten(const MlpModel& model);
void unflatten(MlpModel& model, std::span<const double> params);

void to_json(nlohmann::json& j, const MlpSpec& spec);
void from_json(const nlohmann::json& j, MlpSpec& spec);
void to_json(nlohmann::json& j, const MlpModel& model);
void from_json(const nlohmann::json& j, MlpModel& model);

}  // namespace pi3nn::nnet

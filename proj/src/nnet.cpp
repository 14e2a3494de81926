#include "pi3nn/nnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "pi3nn/error.hpp"
#include "pi3nn/kernels.hpp"

namespace pi3nn::nnet {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_data(const Matrix& x, const Vector& y) {
  if (x.rows() == 0) fail(ErrorKind::kArgument, "training set is empty");
  if (x.rows() != y.size()) {
    fail(ErrorKind::kShape, "inputs have " + std::to_string(x.rows()) +
                                " rows but targets have " + std::to_string(y.size()));
  }
  if (!all_finite(x) || !y.allFinite()) {
    fail(ErrorKind::kData, "training data contains NaN or Inf");
  }
}

double penalty(const MlpModel& model) {
  double total = 0.0;
  for (const DenseLayer& layer : model.layers) {
    if (model.spec.l1 > 0.0) total += model.spec.l1 * layer.weights.cwiseAbs().sum();
    if (model.spec.l2 > 0.0) total += model.spec.l2 * layer.weights.squaredNorm();
  }
  return total;
}

Gradient gradient_from_terms(const MlpModel& model, kernels::SseTerms terms, Index n) {
  const double inv_n = 1.0 / static_cast<double>(n);
  Gradient g{terms.sse * inv_n + penalty(model), std::move(terms.grad)};
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    DenseLayer& gl = g.layers[l];
    const Matrix& w = model.layers[l].weights;
    gl.weights *= inv_n;
    gl.bias *= inv_n;
    if (model.spec.l1 > 0.0) gl.weights += model.spec.l1 * w.unaryExpr(&sign_or_zero);
    if (model.spec.l2 > 0.0) gl.weights += 2.0 * model.spec.l2 * w;
  }
  return g;
}

// Adaptive-moment (or plain gradient) update applied in place.
class Stepper {
 public:
  Stepper(const MlpModel& model, const TrainConfig& cfg)
      : cfg_(cfg), m_(kernels::zeros_like(model)), v_(kernels::zeros_like(model)) {}

  void step(MlpModel& model, const Gradient& g) {
    ++t_;
    if (cfg_.optimizer == Optimizer::kSgd) {
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        model.layers[l].weights -= cfg_.learning_rate * g.layers[l].weights;
        model.layers[l].bias -= cfg_.learning_rate * g.layers[l].bias;
      }
      return;
    }
    const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weights.array(), g.layers[l].weights.array(),
             m_[l].weights.array(), v_[l].weights.array(), c1, c2);
      update(model.layers[l].bias.array(), g.layers[l].bias.array(), m_[l].bias.array(),
             v_[l].bias.array(), c1, c2);
    }
  }

 private:
  template <typename P, typename G>
  void update(P param, const G& grad, P m, P v, double c1, double c2) const {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.square();
    param -= cfg_.learning_rate * (m / c1) / ((v / c2).sqrt() + kAdamEps);
  }

  TrainConfig cfg_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  long long t_ = 0;
};

}  // namespace

void MlpSpec::validate() const {
  if (input_dim <= 0) fail(ErrorKind::kArgument, "input_dim must be positive");
  if (hidden_widths.empty()) fail(ErrorKind::kArgument, "at least one hidden layer is required");
  for (Index w : hidden_widths) {
    if (w <= 0) fail(ErrorKind::kArgument, "hidden widths must be positive");
  }
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) {
    fail(ErrorKind::kArgument, "l1/l2 penalties must be nonnegative");
  }
}

void MlpModel::validate() const {
  spec.validate();
  if (layers.size() != spec.hidden_widths.size() + 1) {
    fail(ErrorKind::kShape, "layer count does not match the architecture");
  }
  Index fan_in = spec.input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Index fan_out = l < spec.hidden_widths.size() ? spec.hidden_widths[l] : 1;
    if (layers[l].weights.rows() != fan_out || layers[l].weights.cols() != fan_in ||
        layers[l].bias.size() != fan_out) {
      fail(ErrorKind::kShape, "layer " + std::to_string(l) + " has inconsistent shape");
    }
    fan_in = fan_out;
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::kArgument, "learning_rate must be positive");
  }
  if (epochs < 1) fail(ErrorKind::kArgument, "epochs must be at least 1");
  if (batch_size < 0) fail(ErrorKind::kArgument, "batch_size must be nonnegative");
}

MlpModel init_model(const MlpSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  MlpModel model{spec, {}};
  Index fan_in = spec.input_dim;
  const std::size_t n_layers = spec.hidden_widths.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const bool hidden = l + 1 < n_layers;
    const Index fan_out = hidden ? spec.hidden_widths[l] : 1;
    // He-uniform for ReLU layers, unit-gain uniform for the linear output.
    const double limit = std::sqrt((hidden ? 6.0 : 3.0) / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
    }
    model.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return model;
}

double forward(const MlpModel& model, std::span<const double> x) {
  if (static_cast<Index>(x.size()) != model.spec.input_dim) {
    fail(ErrorKind::kShape, "input has " + std::to_string(x.size()) +
                                " entries, network expects " +
                                std::to_string(model.spec.input_dim));
  }
  Matrix row(1, model.spec.input_dim);
  std::copy(x.begin(), x.end(), row.data());
  return kernels::forward_parallel(model, row)(0);
}

Vector forward(const MlpModel& model, const Matrix& x) {
  return kernels::forward_parallel(model, x);
}

double mse(const MlpModel& model, const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) fail(ErrorKind::kShape, "inputs and targets differ in length");
  if (x.rows() == 0) fail(ErrorKind::kArgument, "empty batch");
  return (forward(model, x) - y).squaredNorm() / static_cast<double>(x.rows());
}

double objective(const MlpModel& model, const Matrix& x, const Vector& y) {
  return mse(model, x, y) + penalty(model);
}

Gradient objective_gradient(const MlpModel& model, const Matrix& x, const Vector& y) {
  if (x.rows() == 0) fail(ErrorKind::kArgument, "empty batch");
  return gradient_from_terms(model, kernels::sse_gradient_parallel(model, x, y), x.rows());
}

MlpModel train_mse(const MlpModel& model, const Matrix& x, const Vector& y,
                   const TrainConfig& cfg, TrainLog* log) {
  model.validate();
  cfg.validate();
  check_data(x, y);
  if (x.cols() != model.spec.input_dim) {
    fail(ErrorKind::kShape, "input has " + std::to_string(x.cols()) +
                                " columns, network expects " +
                                std::to_string(model.spec.input_dim));
  }

  MlpModel current = model;
  Stepper stepper(current, cfg);
  const Index n = x.rows();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;

  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Matrix xb;
  Vector yb;

  if (log != nullptr) log->loss.reserve(log->loss.size() + static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (full_batch) {
      Gradient g = objective_gradient(current, x, y);
      epoch_loss = g.objective;
      if (!std::isfinite(epoch_loss)) {
        fail(ErrorKind::kDivergence, "loss became non-finite at epoch " + std::to_string(epoch));
      }
      stepper.step(current, g);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      Index batches = 0;
      for (Index begin = 0; begin < n; begin += cfg.batch_size) {
        const Index len = std::min(cfg.batch_size, n - begin);
        xb.resize(len, x.cols());
        yb.resize(len);
        for (Index i = 0; i < len; ++i) {
          const Index src = order[static_cast<std::size_t>(begin + i)];
          xb.row(i) = x.row(src);
          yb(i) = y(src);
        }
        Gradient g = objective_gradient(current, xb, yb);
        if (!std::isfinite(g.objective)) {
          fail(ErrorKind::kDivergence,
               "loss became non-finite at epoch " + std::to_string(epoch));
        }
        epoch_loss += g.objective;
        ++batches;
        stepper.step(current, g);
      }
      epoch_loss /= static_cast<double>(batches);
    }
    if (log != nullptr) log->loss.push_back(epoch_loss);
  }

  for (const DenseLayer& layer : current.layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      fail(ErrorKind::kDivergence,
           "parameters became non-finite at epoch " + std::to_string(cfg.epochs));
    }
  }
  return current;
}

MlpModel set_output_bias(MlpModel model, double value) {
  if (model.layers.empty() || model.layers.back().bias.size() != 1) {
    fail(ErrorKind::kShape, "network has no scalar output layer");
  }
  model.layers.back().bias(0) = value;
  return model;
}

double mean_output(const MlpModel& model, const Matrix& x) {
  if (x.rows() == 0) fail(ErrorKind::kArgument, "mean_output needs at least one input");
  return forward(model, x).mean();
}

std::vector<double> flatten(const MlpModel& model) {
  std::vector<double> out;
  out.reserve(model.parameter_count());
  for (const DenseLayer& layer : model.layers) {
    out.insert(out.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

void unflatten(MlpModel& model, std::span<const double> params) {
  if (params.size() != model.parameter_count()) {
    fail(ErrorKind::kShape, "parameter vector has the wrong length");
  }
  auto it = params.begin();
  for (DenseLayer& layer : model.layers) {
    std::copy_n(it, layer.weights.size(), layer.weights.data());
    it += layer.weights.size();
    std::copy_n(it, layer.bias.size(), layer.bias.data());
    it += layer.bias.size();
  }
}

std::uint64_t parameter_hash(const MlpModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double p : flatten(model)) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void to_json(nlohmann::json& j, const MlpSpec& spec) {
  j = nlohmann::json{{"input_dim", spec.input_dim},
                     {"hidden_widths", spec.hidden_widths},
                     {"output_positivity", spec.output_positivity},
                     {"l1", spec.l1},
                     {"l2", spec.l2},
                     {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, MlpSpec& spec) {
  j.at("input_dim").get_to(spec.input_dim);
  j.at("hidden_widths").get_to(spec.hidden_widths);
  j.at("output_positivity").get_to(spec.output_positivity);
  j.at("l1").get_to(spec.l1);
  j.at("l2").get_to(spec.l2);
  j.at("seed").get_to(spec.seed);
}

void to_json(nlohmann::json& j, const MlpModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& layer : model.layers) {
    layers.push_back({{"rows", layer.weights.rows()},
                      {"cols", layer.weights.cols()},
                      {"weights", std::vector<double>(layer.weights.data(),
                                                      layer.weights.data() + layer.weights.size())},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  j = nlohmann::json{{"spec", model.spec}, {"layers", std::move(layers)}};
}

void from_json(const nlohmann::json& j, MlpModel& model) {
  j.at("spec").get_to(model.spec);
  model.layers.clear();
  for (const auto& jl : j.at("layers")) {
    const auto rows = jl.at("rows").get<Index>();
    const auto cols = jl.at("cols").get<Index>();
    const auto weights = jl.at("weights").get<std::vector<double>>();
    const auto bias = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Index>(weights.size()) != rows * cols ||
        static_cast<Index>(bias.size()) != rows) {
      fail(ErrorKind::kShape, "serialized layer has inconsistent sizes");
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows)};
    std::copy(weights.begin(), weights.end(), layer.weights.data());
    std::copy(bias.begin(), bias.end(), layer.bias.data());
    model.layers.push_back(std::move(layer));
  }
  model.validate();
}

}  // namespace pi3nn::nnet

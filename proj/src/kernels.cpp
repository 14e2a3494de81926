#include "pi3nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pi3nn/error.hpp"

namespace pi3nn::nnet::kernels {
namespace {

double sign_or_zero(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

Index block_count(Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

// Activations of one block: pre[l] and post[l] for every layer. post of the
// last layer is the network output (after |.| when positivity is on).
struct BlockTrace {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  Matrix delta;
  Matrix upstream;
};

// Reused per thread so block buffers are not reallocated on every call.
BlockTrace& thread_trace() {
  thread_local BlockTrace trace;
  return trace;
}

template <typename Rows>
void forward_block(const MlpModel& model, const Rows& x, BlockTrace& trace) {
  const std::size_t n_layers = model.layers.size();
  trace.pre.resize(n_layers);
  trace.post.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = model.layers[l];
    if (l == 0) {
      trace.pre[l].noalias() = x * layer.weights.transpose();
    } else {
      trace.pre[l].noalias() = trace.post[l - 1] * layer.weights.transpose();
    }
    trace.pre[l].rowwise() += layer.bias.transpose();
    if (l + 1 < n_layers) {
      trace.post[l] = trace.pre[l].cwiseMax(0.0);
    } else if (model.spec.output_positivity) {
      trace.post[l] = trace.pre[l].cwiseAbs();
    } else {
      trace.post[l] = trace.pre[l];
    }
  }
}

// Accumulates the SSE gradient of one block into `grad`; returns the block SSE.
template <typename Rows, typename Targets>
double backward_block(const MlpModel& model, const Rows& x, const Targets& y,
                      BlockTrace& trace, std::vector<DenseLayer>& grad) {
  const std::size_t n_layers = model.layers.size();
  const std::size_t out = n_layers - 1;
  const Index rows = y.size();
  Matrix& delta = trace.delta;
  Matrix& upstream = trace.upstream;
  delta.resize(rows, 1);
  double sse = 0.0;
  for (Index i = 0; i < rows; ++i) {
    const double residual = trace.post[out](i, 0) - y(i);
    sse += residual * residual;
    double d = 2.0 * residual;
    if (model.spec.output_positivity) d *= sign_or_zero(trace.pre[out](i, 0));
    delta(i, 0) = d;
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    if (l == 0) {
      grad[l].weights.noalias() += delta.transpose() * x;
    } else {
      grad[l].weights.noalias() += delta.transpose() * trace.post[l - 1];
    }
    grad[l].bias += delta.colwise().sum().transpose();
    if (l == 0) break;
    upstream.resize(rows, model.layers[l].weights.cols());
    upstream.noalias() = delta * model.layers[l].weights;
    delta = (trace.pre[l - 1].array() > 0.0).select(upstream, 0.0);
  }
  return sse;
}

void check_input(const MlpModel& model, const Matrix& x) {
  if (x.cols() != model.spec.input_dim) {
    fail(ErrorKind::kShape, "input has " + std::to_string(x.cols()) +
                                " columns, network expects " +
                                std::to_string(model.spec.input_dim));
  }
}

void check_targets(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    fail(ErrorKind::kShape, "inputs have " + std::to_string(x.rows()) +
                                " rows but targets have " + std::to_string(y.size()));
  }
}

}  // namespace

std::vector<DenseLayer> zeros_like(const MlpModel& model) {
  std::vector<DenseLayer> out;
  out.reserve(model.layers.size());
  for (const DenseLayer& layer : model.layers) {
    out.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                   Vector::Zero(layer.bias.size())});
  }
  return out;
}

Vector forward_serial(const MlpModel& model, const Matrix& x) {
  check_input(model, x);
  Vector out(x.rows());
  std::vector<double> current;
  std::vector<double> next;
  for (Index i = 0; i < x.rows(); ++i) {
    current.assign(x.row(i).data(), x.row(i).data() + x.cols());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const DenseLayer& layer = model.layers[l];
      next.assign(static_cast<std::size_t>(layer.weights.rows()), 0.0);
      for (Index r = 0; r < layer.weights.rows(); ++r) {
        double z = layer.bias(r);
        for (Index c = 0; c < layer.weights.cols(); ++c) {
          z += layer.weights(r, c) * current[static_cast<std::size_t>(c)];
        }
        const bool hidden = l + 1 < model.layers.size();
        if (hidden) {
          z = std::max(z, 0.0);
        } else if (model.spec.output_positivity) {
          z = std::abs(z);
        }
        next[static_cast<std::size_t>(r)] = z;
      }
      current.swap(next);
    }
    out(i) = current[0];
  }
  return out;
}

Vector forward_parallel(const MlpModel& model, const Matrix& x) {
  check_input(model, x);
  const Index rows = x.rows();
  const Index blocks = block_count(rows);
  Vector out(rows);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    const Index begin = b * kBlockRows;
    const Index len = std::min(kBlockRows, rows - begin);
    BlockTrace& trace = thread_trace();
    forward_block(model, x.middleRows(begin, len), trace);
    out.segment(begin, len) = trace.post.back().col(0);
  }
  return out;
}

SseTerms sse_gradient_serial(const MlpModel& model, const Matrix& x, const Vector& y) {
  check_input(model, x);
  check_targets(x, y);
  const std::size_t n_layers = model.layers.size();
  SseTerms terms{0.0, zeros_like(model)};

  std::vector<std::vector<double>> pre(n_layers);
  std::vector<std::vector<double>> post(n_layers);
  for (Index i = 0; i < x.rows(); ++i) {
    // Forward, keeping every layer's pre- and post-activation.
    for (std::size_t l = 0; l < n_layers; ++l) {
      const DenseLayer& layer = model.layers[l];
      const auto width = static_cast<std::size_t>(layer.weights.rows());
      pre[l].assign(width, 0.0);
      post[l].assign(width, 0.0);
      for (Index r = 0; r < layer.weights.rows(); ++r) {
        double z = layer.bias(r);
        for (Index c = 0; c < layer.weights.cols(); ++c) {
          const double in = l == 0 ? x(i, c) : post[l - 1][static_cast<std::size_t>(c)];
          z += layer.weights(r, c) * in;
        }
        pre[l][static_cast<std::size_t>(r)] = z;
        if (l + 1 < n_layers) {
          post[l][static_cast<std::size_t>(r)] = std::max(z, 0.0);
        } else {
          post[l][static_cast<std::size_t>(r)] = model.spec.output_positivity ? std::abs(z) : z;
        }
      }
    }

    const double residual = post.back()[0] - y(i);
    terms.sse += residual * residual;

    std::vector<double> delta{2.0 * residual};
    if (model.spec.output_positivity) delta[0] *= sign_or_zero(pre.back()[0]);

    for (std::size_t l = n_layers; l-- > 0;) {
      const DenseLayer& layer = model.layers[l];
      DenseLayer& g = terms.grad[l];
      for (Index r = 0; r < layer.weights.rows(); ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        g.bias(r) += d;
        for (Index c = 0; c < layer.weights.cols(); ++c) {
          const double in = l == 0 ? x(i, c) : post[l - 1][static_cast<std::size_t>(c)];
          g.weights(r, c) += d * in;
        }
      }
      if (l == 0) break;
      std::vector<double> upstream(static_cast<std::size_t>(layer.weights.cols()), 0.0);
      for (Index c = 0; c < layer.weights.cols(); ++c) {
        if (pre[l - 1][static_cast<std::size_t>(c)] <= 0.0) continue;
        double acc = 0.0;
        for (Index r = 0; r < layer.weights.rows(); ++r) {
          acc += delta[static_cast<std::size_t>(r)] * layer.weights(r, c);
        }
        upstream[static_cast<std::size_t>(c)] = acc;
      }
      delta.swap(upstream);
    }
  }
  return terms;
}

SseTerms sse_gradient_parallel(const MlpModel& model, const Matrix& x, const Vector& y) {
  check_input(model, x);
  check_targets(x, y);
  const Index rows = x.rows();
  const Index blocks = block_count(rows);

  std::vector<SseTerms> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    const Index begin = b * kBlockRows;
    const Index len = std::min(kBlockRows, rows - begin);
    SseTerms& p = partial[static_cast<std::size_t>(b)];
    p.grad = zeros_like(model);
    BlockTrace& trace = thread_trace();
    const auto xb = x.middleRows(begin, len);
    forward_block(model, xb, trace);
    p.sse = backward_block(model, xb, y.segment(begin, len), trace, p.grad);
  }

  // Fixed-order reduction keeps the result independent of the thread count.
  SseTerms total{0.0, zeros_like(model)};
  for (const SseTerms& p : partial) {
    total.sse += p.sse;
    for (std::size_t l = 0; l < total.grad.size(); ++l) {
      total.grad[l].weights += p.grad[l].weights;
      total.grad[l].bias += p.grad[l].bias;
    }
  }
  return total;
}

}  // namespace pi3nn::nnet::kernels

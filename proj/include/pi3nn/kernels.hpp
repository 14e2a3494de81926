#pragma once

// Batch kernels behind nnet::forward and nnet::train_mse.
//
// The parallel kernels split the batch into fixed blocks of kBlockRows
// samples, evaluate each block with dense matrix products, and reduce block
// partials in block order. Block boundaries do not depend on the thread
// count, so results are bitwise identical for any OMP_NUM_THREADS.
//
// The serial kernels evaluate one sample at a time with plain loops. They
// are the reference the parallel kernels are tested against and the
// baseline in bench/kernel_bench.

#include <vector>

#include "pi3nn/nnet.hpp"

namespace pi3nn::nnet::kernels {

inline constexpr Index kBlockRows = 256;

/// Sum of squared errors and its gradient (data term only, not averaged).
struct SseTerms {
  double sse = 0.0;
  std::vector<DenseLayer> grad;
};

Vector forward_serial(const MlpModel& model, const Matrix& x);
Vector forward_parallel(const MlpModel& model, const Matrix& x);

SseTerms sse_gradient_serial(const MlpModel& model, const Matrix& x, const Vector& y);
SseTerms sse_gradient_parallel(const MlpModel& model, const Matrix& x, const Vector& y);

/// Zero-filled gradient buffers shaped like `model.layers`.
std::vector<DenseLayer> zeros_like(const MlpModel& model);

}  // namespace pi3nn::nnet::kernels

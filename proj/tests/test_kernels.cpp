#include <random>

#include <gtest/gtest.h>
#include <omp.h>

#include "pi3nn/kernels.hpp"
#include "test_util.hpp"

namespace pi3nn::nnet::kernels {
namespace {

using testing::random_matrix;
using testing::random_model;
using testing::random_vector;

MlpModel model_for(Index dim, std::vector<Index> hidden, bool positive, std::mt19937_64& rng) {
  MlpSpec spec;
  spec.input_dim = dim;
  spec.hidden_widths = std::move(hidden);
  spec.output_positivity = positive;
  spec.seed = rng();
  return random_model(spec, rng);
}

double max_rel_diff(const Matrix& a, const Matrix& b) {
  return ((a - b).array().abs() / (a.array().abs().max(b.array().abs()) + 1e-12)).maxCoeff();
}

// Row counts straddle the block size so partial last blocks are exercised.
TEST(Kernels, ParallelForwardMatchesSerial) {
  std::mt19937_64 rng(3);
  for (Index rows : std::initializer_list<Index>{1, 7, kBlockRows - 1, kBlockRows, kBlockRows + 1, 3 * kBlockRows + 17}) {
    for (bool positive : {false, true}) {
      const MlpModel m = model_for(4, {13, 6}, positive, rng);
      const Matrix x = random_matrix(rows, 4, rng);
      const Vector a = forward_serial(m, x);
      const Vector b = forward_parallel(m, x);
      EXPECT_LT(max_rel_diff(a, b), 1e-12) << rows;
    }
  }
}

TEST(Kernels, ParallelGradientMatchesSerial) {
  std::mt19937_64 rng(5);
  for (Index rows : std::initializer_list<Index>{1, 33, kBlockRows + 3, 2 * kBlockRows}) {
    for (bool positive : {false, true}) {
      const MlpModel m = model_for(3, {9}, positive, rng);
      const Matrix x = random_matrix(rows, 3, rng);
      const Vector y = random_vector(rows, rng);
      const SseTerms a = sse_gradient_serial(m, x, y);
      const SseTerms b = sse_gradient_parallel(m, x, y);
      EXPECT_NEAR(a.sse, b.sse, 1e-10 * (1.0 + a.sse));
      for (std::size_t l = 0; l < a.grad.size(); ++l) {
        EXPECT_LT(max_rel_diff(a.grad[l].weights, b.grad[l].weights), 1e-9);
        EXPECT_LT(max_rel_diff(a.grad[l].bias, b.grad[l].bias), 1e-9);
      }
    }
  }
}

TEST(Kernels, ResultIndependentOfThreadCount) {
  std::mt19937_64 rng(7);
  const MlpModel m = model_for(5, {40}, true, rng);
  const Matrix x = random_matrix(5 * kBlockRows + 11, 5, rng);
  const Vector y = random_vector(x.rows(), rng);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const SseTerms one = sse_gradient_parallel(m, x, y);
  const Vector f_one = forward_parallel(m, x);
  omp_set_num_threads(4);
  const SseTerms four = sse_gradient_parallel(m, x, y);
  const Vector f_four = forward_parallel(m, x);
  omp_set_num_threads(saved);

  EXPECT_EQ(one.sse, four.sse);
  EXPECT_TRUE(f_one == f_four);
  for (std::size_t l = 0; l < one.grad.size(); ++l) {
    EXPECT_TRUE(one.grad[l].weights == four.grad[l].weights);
    EXPECT_TRUE(one.grad[l].bias == four.grad[l].bias);
  }
}

TEST(Kernels, EmptyBatch) {
  std::mt19937_64 rng(9);
  const MlpModel m = model_for(2, {4}, false, rng);
  EXPECT_EQ(forward_parallel(m, Matrix(0, 2)).size(), 0);
  const SseTerms t = sse_gradient_parallel(m, Matrix(0, 2), Vector(0));
  EXPECT_EQ(t.sse, 0.0);
}

}  // namespace
}  // namespace pi3nn::nnet::kernels

#pragma once

#include <cstddef>
#include <cstdint>

#include "lanca/matrix.hpp"

namespace lanca::metrics {

struct IndependenceConfig {
  std::size_t shuffles = 500;
  double alpha = 0.01;
  std::uint64_t seed = 0;
  // Incomplete Cholesky stops once the residual trace falls below this
  // fraction of N, or at max_rank columns.
  double cholesky_tol = 1e-6;
  std::size_t max_rank = 64;
};

struct IndependenceResult {
  double statistic = 0.0;  // biased HSIC with median-heuristic RBF kernels
  double p_value = 1.0;
  bool independent = true;  // p_value > alpha
};

// Kernel independence test between the rows of x and y (same N) with a
// permutation null.
IndependenceResult independence_test(const Matrix& x, const Matrix& y,
                                     const IndependenceConfig& config = {});

// Pivoted incomplete Cholesky of the RBF Gram matrix of x: K ~ G G^T.
Matrix rbf_incomplete_cholesky(const Matrix& x, double sigma, double tol, std::size_t max_rank);

double median_heuristic(const Matrix& x, std::size_t max_points = 1000);

}  // namespace lanca::metrics

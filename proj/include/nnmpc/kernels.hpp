#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nnmpc/relu_network.hpp"

namespace nnmpc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows processed together by the parallel kernels. Partial results are
/// combined in chunk order, so the parallel result does not depend on the
/// thread count.
inline constexpr int kChunkRows = 64;

/// Network outputs for every row of `inputs` (one sample per row).
RowMatrix forward_batch_serial(const ReluNetwork& net, const RowMatrix& inputs);
RowMatrix forward_batch_parallel(const ReluNetwork& net, const RowMatrix& inputs);

/// Mean-squared-error gradient with respect to every weight and bias.
struct Gradient {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  double loss = 0.0;  // mean over samples of ‖f(x) − y‖²
};

/// Loss and gradient over rows [first, first + count) of `order` (sample
/// indices into inputs/targets).
Gradient mse_gradient_serial(const std::vector<DenseLayer>& layers, const RowMatrix& inputs,
                             const RowMatrix& targets, const std::vector<int>& order, int first,
                             int count);
Gradient mse_gradient_parallel(const std::vector<DenseLayer>& layers, const RowMatrix& inputs,
                               const RowMatrix& targets, const std::vector<int>& order, int first,
                               int count);

/// Number of samples whose hidden pre-activations or outputs leave the
/// bounds by more than `tol`.
long count_bound_violations_serial(const ReluNetwork& net, const LayerBounds& bounds,
                                   const RowMatrix& samples, double tol = 1e-9);
long count_bound_violations_parallel(const ReluNetwork& net, const LayerBounds& bounds,
                                     const RowMatrix& samples, double tol = 1e-9);

/// Uniform samples in the network input box of `bounds`.
RowMatrix sample_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int count,
                     unsigned long long seed);

}  // namespace nnmpc

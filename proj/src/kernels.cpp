#include "nnmpc/kernels.hpp"

#include <random>
#include <stdexcept>

namespace nnmpc {
namespace {

int chunk_count(int rows) { return (rows + kChunkRows - 1) / kChunkRows; }

// Column-per-sample forward pass keeping every activation.
struct Activations {
  std::vector<Eigen::MatrixXd> pre;   // per layer, including the output layer
  std::vector<Eigen::MatrixXd> post;  // post[0] = inputs, post[i + 1] = relu(pre[i])
};

Activations forward_columns(const std::vector<DenseLayer>& layers, Eigen::MatrixXd x) {
  Activations a;
  a.post.push_back(std::move(x));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weight * a.post.back();
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) a.post.push_back(z.cwiseMax(0.0));
    a.pre.push_back(std::move(z));
  }
  return a;
}

Gradient zero_gradient(const std::vector<DenseLayer>& layers) {
  Gradient g;
  for (const auto& l : layers) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

// Sums (not means) of loss and gradient over the given sample indices.
void accumulate(const std::vector<DenseLayer>& layers, const RowMatrix& inputs,
                const RowMatrix& targets, const std::vector<int>& order, int first, int count,
                Gradient& g) {
  if (count <= 0) return;
  Eigen::MatrixXd x(inputs.cols(), count);
  Eigen::MatrixXd y(targets.cols(), count);
  for (int k = 0; k < count; ++k) {
    x.col(k) = inputs.row(order[first + k]).transpose();
    y.col(k) = targets.row(order[first + k]).transpose();
  }
  const Activations a = forward_columns(layers, std::move(x));
  Eigen::MatrixXd delta = a.pre.back() - y;
  g.loss += delta.squaredNorm();
  delta *= 2.0;
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    g.weight[i] += delta * a.post[i].transpose();
    g.bias[i] += delta.rowwise().sum();
    if (i == 0) break;
    // Subgradient 0 at a zero pre-activation.
    delta = (layers[i].weight.transpose() * delta).cwiseProduct(
        (a.pre[i - 1].array() > 0.0).cast<double>().matrix());
  }
}

void scale(Gradient& g, double s) {
  g.loss *= s;
  for (auto& w : g.weight) w *= s;
  for (auto& b : g.bias) b *= s;
}

void add(Gradient& into, const Gradient& g) {
  into.loss += g.loss;
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    into.weight[i] += g.weight[i];
    into.bias[i] += g.bias[i];
  }
}

bool sample_violates(const ReluNetwork& net, const LayerBounds& b,
                     const Eigen::VectorXd& input, double tol) {
  const auto pre = net.hidden_pre_activations(input);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (((pre[i] - b.pre_lower[i]).array() < -tol).any() ||
        ((b.pre_upper[i] - pre[i]).array() < -tol).any()) {
      return true;
    }
  }
  const Eigen::VectorXd out = net.forward(input);
  return ((out - b.output_lower).array() < -tol).any() ||
         ((b.output_upper - out).array() < -tol).any();
}

void check_range(const RowMatrix& inputs, const std::vector<int>& order, int first, int count) {
  if (first < 0 || count < 0 || first + count > static_cast<int>(order.size())) {
    throw std::out_of_range("mse_gradient: sample range outside the order vector");
  }
  for (int k = first; k < first + count; ++k) {
    if (order[k] < 0 || order[k] >= inputs.rows()) {
      throw std::out_of_range("mse_gradient: sample index out of range");
    }
  }
}

}  // namespace

RowMatrix forward_batch_serial(const ReluNetwork& net, const RowMatrix& inputs) {
  RowMatrix out(inputs.rows(), net.output_dim());
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    out.row(r) = net.forward(inputs.row(r).transpose()).transpose();
  }
  return out;
}

RowMatrix forward_batch_parallel(const ReluNetwork& net, const RowMatrix& inputs) {
  if (inputs.cols() != net.input_dim()) {
    throw std::invalid_argument("forward_batch: input width mismatch");
  }
  RowMatrix out(inputs.rows(), net.output_dim());
  const int rows = static_cast<int>(inputs.rows());
  const int chunks = chunk_count(rows);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    const int first = c * kChunkRows;
    const int count = std::min(kChunkRows, rows - first);
    const Activations a =
        forward_columns(net.layers(), inputs.middleRows(first, count).transpose());
    out.middleRows(first, count) = a.pre.back().transpose();
  }
  return out;
}

Gradient mse_gradient_serial(const std::vector<DenseLayer>& layers, const RowMatrix& inputs,
                             const RowMatrix& targets, const std::vector<int>& order, int first,
                             int count) {
  check_range(inputs, order, first, count);
  Gradient g = zero_gradient(layers);
  accumulate(layers, inputs, targets, order, first, count, g);
  if (count > 0) scale(g, 1.0 / count);
  return g;
}

Gradient mse_gradient_parallel(const std::vector<DenseLayer>& layers, const RowMatrix& inputs,
                               const RowMatrix& targets, const std::vector<int>& order, int first,
                               int count) {
  check_range(inputs, order, first, count);
  const int chunks = chunk_count(count);
  std::vector<Gradient> partial(chunks, zero_gradient(layers));
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    const int start = first + c * kChunkRows;
    accumulate(layers, inputs, targets, order, start,
               std::min(kChunkRows, first + count - start), partial[c]);
  }
  Gradient g = zero_gradient(layers);
  for (const auto& p : partial) add(g, p);
  if (count > 0) scale(g, 1.0 / count);
  return g;
}

long count_bound_violations_serial(const ReluNetwork& net, const LayerBounds& bounds,
                                   const RowMatrix& samples, double tol) {
  long bad = 0;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    bad += sample_violates(net, bounds, samples.row(r).transpose(), tol);
  }
  return bad;
}

long count_bound_violations_parallel(const ReluNetwork& net, const LayerBounds& bounds,
                                     const RowMatrix& samples, double tol) {
  long bad = 0;
  const long rows = static_cast<long>(samples.rows());
#pragma omp parallel for reduction(+ : bad) schedule(static)
  for (long r = 0; r < rows; ++r) {
    bad += sample_violates(net, bounds, samples.row(r).transpose(), tol);
  }
  return bad;
}

RowMatrix sample_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int count,
                     unsigned long long seed) {
  if (lower.size() != upper.size() || count < 0) throw std::invalid_argument("sample_box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RowMatrix s(count, lower.size());
  for (int r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < lower.size(); ++c) {
      s(r, c) = lower[c] + (upper[c] - lower[c]) * u01(rng);
    }
  }
  return s;
}

}  // namespace nnmpc

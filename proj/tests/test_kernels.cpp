#include <doctest.h>

#include <omp.h>

#include <numeric>
#include <random>

#include "nnmpc/kernels.hpp"
#include "test_util.hpp"

using namespace nnmpc;
using namespace nnmpc::testing;

namespace {

struct Fixture {
  std::mt19937_64 rng{11};
  ReluNetwork net = random_network(rng, {3, 17, 9, 2});
  RowMatrix x = sample_box(Eigen::Vector3d(-1, -2, -3), Eigen::Vector3d(1, 2, 3), 517, 5);
  RowMatrix y = sample_box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1), 517, 6);
  std::vector<int> order = [] {
    std::vector<int> o(517);
    std::iota(o.begin(), o.end(), 0);
    std::reverse(o.begin(), o.end());
    return o;
  }();
};

double loss_at(const std::vector<DenseLayer>& layers, const Fixture& f) {
  return mse_gradient_serial(layers, f.x, f.y, f.order, 3, 300).loss;
}

}  // namespace

TEST_CASE("batched forward matches the per-sample forward pass") {
  Fixture f;
  const RowMatrix s = forward_batch_serial(f.net, f.x);
  const RowMatrix p = forward_batch_parallel(f.net, f.x);
  for (int r = 0; r < f.x.rows(); ++r) {
    const Eigen::VectorXd ref = f.net.forward(f.x.row(r).transpose());
    CHECK((s.row(r).transpose() - ref).norm() <= 1e-12);
  }
  CHECK((s - p).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("parallel gradient agrees with the serial reference") {
  Fixture f;
  const auto s = mse_gradient_serial(f.net.layers(), f.x, f.y, f.order, 3, 300);
  const auto p = mse_gradient_parallel(f.net.layers(), f.x, f.y, f.order, 3, 300);
  CHECK(std::abs(s.loss - p.loss) <= 1e-12 * (1 + s.loss));
  for (std::size_t i = 0; i < s.weight.size(); ++i) {
    CHECK((s.weight[i] - p.weight[i]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.bias[i] - p.bias[i]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("gradient matches central finite differences") {
  Fixture f;
  const auto g = mse_gradient_serial(f.net.layers(), f.x, f.y, f.order, 3, 300);
  const double h = 1e-6;
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      const int r = k % g.weight[i].rows();
      const int c = (3 * k) % g.weight[i].cols();
      auto plus = f.net.layers();
      auto minus = f.net.layers();
      plus[i].weight(r, c) += h;
      minus[i].weight(r, c) -= h;
      const double fd = (loss_at(plus, f) - loss_at(minus, f)) / (2 * h);
      CHECK(g.weight[i](r, c) == doctest::Approx(fd).epsilon(1e-5));
      plus = f.net.layers();
      minus = f.net.layers();
      plus[i].bias[r] += h;
      minus[i].bias[r] -= h;
      const double fb = (loss_at(plus, f) - loss_at(minus, f)) / (2 * h);
      CHECK(g.bias[i][r] == doctest::Approx(fb).epsilon(1e-5));
    }
  }
}

TEST_CASE("parallel kernels are bitwise identical across thread counts") {
  Fixture f;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto g1 = mse_gradient_parallel(f.net.layers(), f.x, f.y, f.order, 0, 517);
  const RowMatrix o1 = forward_batch_parallel(f.net, f.x);
  omp_set_num_threads(4);
  const auto g4 = mse_gradient_parallel(f.net.layers(), f.x, f.y, f.order, 0, 517);
  const RowMatrix o4 = forward_batch_parallel(f.net, f.x);
  omp_set_num_threads(saved);
  CHECK(g1.loss == g4.loss);
  for (std::size_t i = 0; i < g1.weight.size(); ++i) {
    CHECK(g1.weight[i] == g4.weight[i]);
    CHECK(g1.bias[i] == g4.bias[i]);
  }
  CHECK(o1 == o4);
}

TEST_CASE("sampled points satisfy the interval bounds") {
  Fixture f;
  const Eigen::Vector3d lo(-1, -2, -3), hi(1, 2, 3);
  const auto bounds = propagate_bounds(f.net, lo, hi);
  const RowMatrix s = sample_box(lo, hi, 4000, 9);
  CHECK(count_bound_violations_serial(f.net, bounds, s) == 0);
  CHECK(count_bound_violations_parallel(f.net, bounds, s) == 0);
  // Shrinking one output bound to its midpoint must produce violations.
  auto tight = bounds;
  tight.output_upper[0] = 0.5 * (bounds.output_lower[0] + bounds.output_upper[0]);
  const long bad = count_bound_violations_serial(f.net, tight, s);
  CHECK(bad > 0);
  CHECK(count_bound_violations_parallel(f.net, tight, s) == bad);
}

TEST_CASE("sample_box is deterministic and stays in the box") {
  const Eigen::Vector2d lo(-1, 2), hi(1, 2);
  const RowMatrix a = sample_box(lo, hi, 100, 3);
  CHECK(a == sample_box(lo, hi, 100, 3));
  CHECK((a.col(0).array() >= -1).all());
  CHECK((a.col(0).array() <= 1).all());
  CHECK((a.col(1).array() == 2).all());
}

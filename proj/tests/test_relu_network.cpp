#include <doctest.h>

#include <random>

#include "nnmpc/relu_network.hpp"
#include "test_util.hpp"

using namespace nnmpc;

namespace {

ReluNetwork abs_network() {
  DenseLayer hidden{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2)};
  hidden.weight << 1, -1;
  DenseLayer out{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)};
  return ReluNetwork({hidden, out});
}

}  // namespace

TEST_CASE("forward computes |x| with a two-neuron network") {
  const auto net = abs_network();
  CHECK(net.forward(Eigen::VectorXd::Constant(1, -2.0))[0] == 2.0);
  CHECK(net.forward(Eigen::VectorXd::Constant(1, 3.5))[0] == 3.5);
  CHECK(net.hidden_neuron_count() == 2);
}

TEST_CASE("constant network returns its output bias") {
  DenseLayer hidden{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)};
  DenseLayer out{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Constant(1, 0.5)};
  const ReluNetwork net({hidden, out});
  CHECK(net.forward(Eigen::Vector3d(1, -7, 2))[0] == 0.5);
}

TEST_CASE("forward rejects a wrong input dimension") {
  CHECK_THROWS_AS(abs_network().forward(Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("construction validates shapes and finiteness") {
  DenseLayer a{Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3)};
  DenseLayer b{Eigen::MatrixXd::Ones(1, 4), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(ReluNetwork({a, b}), std::invalid_argument);
  DenseLayer c{Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)};
  c.weight(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ReluNetwork({a, c}), std::invalid_argument);
}

TEST_CASE("identity hidden layer propagates the box unchanged") {
  DenseLayer hidden{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
  DenseLayer out{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)};
  const ReluNetwork net({hidden, out});
  const auto b = propagate_bounds(net, Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  CHECK(b.pre_lower[0] == Eigen::Vector2d(-1, -1));
  CHECK(b.pre_upper[0] == Eigen::Vector2d(1, 1));
  CHECK(b.post_lower[0] == Eigen::Vector2d(0, 0));
  CHECK(b.post_upper[0] == Eigen::Vector2d(1, 1));
  CHECK(b.output_lower[0] == 0.0);
  CHECK(b.output_upper[0] == 2.0);
}

TEST_CASE("sign-split row bounds and bias shift") {
  DenseLayer hidden{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  hidden.weight << 1, -1;
  DenseLayer out{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  auto b = propagate_bounds(ReluNetwork({hidden, out}), Eigen::Vector2d(0, 0),
                            Eigen::Vector2d(1, 1));
  CHECK(b.pre_lower[0][0] == -1.0);
  CHECK(b.pre_upper[0][0] == 1.0);

  hidden.bias[0] = 0.25;
  b = propagate_bounds(ReluNetwork({hidden, out}), Eigen::Vector2d(0, 0),
                       Eigen::Vector2d(1, 1));
  CHECK(b.pre_lower[0][0] == -0.75);
  CHECK(b.pre_upper[0][0] == 1.25);
}

TEST_CASE("propagate_bounds rejects an inverted box") {
  CHECK_THROWS_AS(propagate_bounds(abs_network(), Eigen::VectorXd::Constant(1, 1.0),
                                   Eigen::VectorXd::Constant(1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("interval bounds contain sampled activations") {
  std::mt19937_64 rng(7);
  const auto net = testing::random_network(rng, {3, 12, 9, 2});
  const Eigen::Vector3d lo(-1.0, -2.0, 0.5);
  const Eigen::Vector3d hi(1.0, 0.5, 3.0);
  const auto b = propagate_bounds(net, lo, hi);
  int violations = 0;
  for (int s = 0; s < 100000; ++s) {
    const Eigen::VectorXd in = testing::uniform_in_box(rng, lo, hi);
    const auto pre = net.hidden_pre_activations(in);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      violations += ((pre[i].array() < b.pre_lower[i].array()) ||
                     (pre[i].array() > b.pre_upper[i].array()))
                        .count();
    }
    const Eigen::VectorXd out = net.forward(in);
    violations += ((out.array() < b.output_lower.array()) ||
                   (out.array() > b.output_upper.array()))
                      .count();
  }
  CHECK(violations == 0);
}

TEST_CASE("shrinking the box never loosens bounds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = testing::random_network(rng, {3, 8, 8, 1});
    const Eigen::VectorXd lo = testing::random_vector(rng, 3) - Eigen::VectorXd::Ones(3);
    const Eigen::VectorXd hi = lo + Eigen::VectorXd::Constant(3, 2.0);
    const Eigen::VectorXd a = testing::uniform_in_box(rng, lo, hi);
    const Eigen::VectorXd c = testing::uniform_in_box(rng, lo, hi);
    const Eigen::VectorXd inner_lo = a.cwiseMin(c);
    const Eigen::VectorXd inner_hi = a.cwiseMax(c);
    const auto outer = propagate_bounds(net, lo, hi);
    const auto inner = propagate_bounds(net, inner_lo, inner_hi);
    for (std::size_t i = 0; i < outer.pre_lower.size(); ++i) {
      CHECK((inner.pre_lower[i].array() >= outer.pre_lower[i].array()).all());
      CHECK((inner.pre_upper[i].array() <= outer.pre_upper[i].array()).all());
    }
    CHECK((inner.output_lower.array() >= outer.output_lower.array()).all());
    CHECK((inner.output_upper.array() <= outer.output_upper.array()).all());
  }
}

TEST_CASE("neuron classification") {
  CHECK(classify_neuron(-1.0, -0.5) == NeuronStatus::kStrictlyInactive);
  CHECK(classify_neuron(0.2, 0.9) == NeuronStatus::kStrictlyActive);
  CHECK(classify_neuron(-1.0, 1.0) == NeuronStatus::kUnstable);
  CHECK(classify_neuron(0.0, 0.0) == NeuronStatus::kStrictlyInactive);

  LayerBounds b;
  b.pre_lower = {Eigen::Vector3d(-2, 0.2, -1)};
  b.pre_upper = {Eigen::Vector3d(-0.5, 1, 1)};
  const auto map = classify_neurons(b);
  CHECK(map[0][0] == NeuronStatus::kStrictlyInactive);
  CHECK(map[0][1] == NeuronStatus::kStrictlyActive);
  CHECK(map[0][2] == NeuronStatus::kUnstable);
  CHECK(count_status(map, NeuronStatus::kUnstable) == 1);
}

TEST_CASE("network text round-trips bit for bit") {
  std::mt19937_64 rng(3);
  const auto net = testing::random_network(rng, {3, 7, 5, 1});
  const auto text = network_to_text(net);
  const auto back = network_from_text(text);
  REQUIRE(back.depth() == net.depth());
  for (int i = 0; i < net.depth(); ++i) {
    CHECK(back.layer(i).weight == net.layer(i).weight);
    CHECK(back.layer(i).bias == net.layer(i).bias);
  }
  CHECK(network_to_text(back) == text);
  for (int s = 0; s < 100; ++s) {
    const Eigen::VectorXd in = testing::random_vector(rng, 3);
    CHECK(back.forward(in) == net.forward(in));
  }
}

TEST_CASE("network text rejects malformed documents") {
  CHECK_THROWS_AS(network_from_text("{"), std::invalid_argument);
  CHECK_THROWS_AS(network_from_text(R"({"input_dim":1,"output_dim":1,"layers":[{"rows":1,"cols":2,"W":[1],"b":[0]}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(network_from_text(R"({"input_dim":2,"output_dim":1,"layers":[{"rows":1,"cols":1,"W":[1],"b":[0]}]})"),
                  std::invalid_argument);
}

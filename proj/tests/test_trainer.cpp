#include <doctest.h>

#include <cmath>
#include <limits>

#include "nnmpc/trainer.hpp"

using namespace nnmpc;

namespace {

Dataset affine_dataset(int count) {
  Dataset d;
  d.inputs = sample_box(Eigen::Vector2d(-2, -1), Eigen::Vector2d(2, 3), count, 4);
  d.targets.resize(count, 1);
  for (int r = 0; r < count; ++r) d.targets(r, 0) = 1.5 * d.inputs(r, 0) - 0.7 * d.inputs(r, 1) + 0.2;
  return d;
}

}  // namespace

TEST_CASE("dataset samples lie in X × U with plant residual targets") {
  const auto plant = pendulum_plant();
  const Dataset d = generate_dataset(plant, 500, 1);
  CHECK(d.inputs.rows() == 500);
  CHECK(d.inputs.cols() == 3);
  CHECK(d.targets.cols() == 1);
  CHECK((d.inputs.col(0).array().abs() <= M_PI / 2).all());
  CHECK((d.inputs.col(1).array().abs() <= 5).all());
  CHECK((d.inputs.col(2).array().abs() <= 3).all());
  for (int r = 0; r < 500; ++r) {
    CHECK(d.targets(r, 0) ==
          doctest::Approx(9.8 * std::sin(d.inputs(r, 0)) - 0.01 * d.inputs(r, 1)).epsilon(1e-12));
  }
  CHECK(generate_dataset(plant, 500, 1).inputs == d.inputs);
  CHECK_THROWS_AS(generate_dataset(plant, 0, 1), std::invalid_argument);
}

TEST_CASE("affine target is fitted to high accuracy by one active neuron") {
  const Dataset d = affine_dataset(1000);
  TrainSettings st;
  st.epochs = 600;
  st.batch = 64;
  st.final_learning_rate = 1e-3;
  st.seed = 1;  // initial neuron active on part of the data
  const auto res = train({2, 1, 1}, d, st);
  CHECK(res.best_val_mse < 1e-6);
  CHECK(res.log.size() == 600);
  CHECK(res.net.forward(Eigen::Vector2d(0.3, 0.4))[0] ==
        doctest::Approx(1.5 * 0.3 - 0.7 * 0.4 + 0.2).epsilon(1e-3));
}

TEST_CASE("training is bitwise deterministic and serial/parallel agree closely") {
  const Dataset d = affine_dataset(300);
  TrainSettings st;
  st.epochs = 20;
  st.seed = 8;
  const auto a = train({2, 6, 6, 1}, d, st);
  const auto b = train({2, 6, 6, 1}, d, st);
  CHECK(network_to_text(a.net) == network_to_text(b.net));
  st.parallel = true;
  const auto s = train({2, 6, 6, 1}, d, st);
  CHECK(std::abs(s.best_val_mse - a.best_val_mse) <= 1e-6 * (1 + a.best_val_mse));
}

TEST_CASE("50-neuron pendulum model reaches a small grid error") {
  const auto plant = pendulum_plant();
  const Dataset d = generate_dataset(plant, 20000, 3);
  TrainSettings st;
  st.seed = 3;
  const auto res = train({3, 50, 1}, d, st);
  CHECK(grid_rmse(res.net, plant, 21) < 0.05);
}

TEST_CASE("divergent learning rate is reported") {
  Dataset d = affine_dataset(200);
  d.targets *= 1e300;
  TrainSettings st;
  st.epochs = 5;
  CHECK_THROWS_AS(train({2, 4, 1}, d, st), std::runtime_error);
}

TEST_CASE("best-validation checkpoints never increase and survive a save/load") {
  const Dataset d = affine_dataset(300);
  TrainSettings st;
  st.epochs = 30;
  const auto res = train({2, 5, 1}, d, st);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : res.log) best = std::min(best, e.val_mse);
  CHECK(best == res.best_val_mse);
  CHECK(res.log[res.best_epoch - 1].val_mse == res.best_val_mse);
  const auto copy = network_from_text(network_to_text(res.net));
  const Eigen::Vector2d x(0.1, -0.4);
  CHECK(copy.forward(x) == res.net.forward(x));
}

TEST_CASE("training log CSV has a header and one row per epoch") {
  const std::string csv = training_log_to_csv({{1, 0.5, 0.25}, {2, 0.125, 0.0625}});
  CHECK(csv == "epoch,train_mse,val_mse\n1,0.5,0.25\n2,0.125,0.0625\n");
}

TEST_CASE("invalid settings are rejected") {
  const Dataset d = affine_dataset(50);
  CHECK_THROWS_AS(train({3, 4, 1}, d, {}), std::invalid_argument);
  TrainSettings st;
  st.learning_rate = 0;
  CHECK_THROWS_AS(train({2, 4, 1}, d, st), std::invalid_argument);
}

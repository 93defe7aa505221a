#include "nnmpc/plant.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nnmpc {

Eigen::VectorXd PlantModel::residual(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != 2) throw std::invalid_argument("pendulum residual: state must be 2-D");
  return Eigen::VectorXd::Constant(
      1, params.g * std::sin(x[0]) - params.c * x[1] / (params.m * params.l));
}

PlantModel pendulum_plant(const PendulumParameters& p) {
  if (!(p.ts > 0.0) || !(p.m > 0.0) || !(p.l > 0.0)) {
    throw std::invalid_argument("pendulum_plant: tₛ, m and l must be positive");
  }
  PlantModel plant;
  plant.params = p;
  plant.sys.A = Eigen::MatrixXd{{1.0, p.ts}, {0.0, 1.0}};
  plant.sys.B = Eigen::MatrixXd{{0.0}, {p.ts / (p.m * p.l * p.l)}};
  plant.sys.D = Eigen::MatrixXd{{0.0}, {p.ts / p.l}};
  plant.sys.C = Eigen::MatrixXd{{1.0, 0.0}};
  plant.boxes.state = {Eigen::Vector2d(-std::numbers::pi / 2, -5.0),
                       Eigen::Vector2d(std::numbers::pi / 2, 5.0)};
  plant.boxes.input = {Eigen::VectorXd::Constant(1, -3.0), Eigen::VectorXd::Constant(1, 3.0)};
  return plant;
}

Eigen::VectorXd plant_step(const PlantModel& plant, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (x.size() != 2 || u.size() != 1) throw std::invalid_argument("plant_step: dimension mismatch");
  const auto& p = plant.params;
  const double ml2 = p.m * p.l * p.l;
  Eigen::VectorXd next(2);
  next[0] = x[0] + p.ts * x[1];
  next[1] = x[1] + p.ts * p.g * std::sin(x[0]) / p.l - p.ts * p.c * x[1] / ml2 + p.ts * u[0] / ml2;
  return next;
}

}  // namespace nnmpc

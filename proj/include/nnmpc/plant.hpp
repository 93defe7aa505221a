#pragma once

#include <Eigen/Dense>

#include "nnmpc/system.hpp"

namespace nnmpc {

struct PendulumParameters {
  double ts = 0.1;
  double m = 1.0;
  double l = 1.0;
  double g = 9.8;
  double c = 0.01;
};

/// True inverted-pendulum plant written as x⁺ = A x + B u + D f(x).
struct PlantModel {
  PendulumParameters params;
  SystemMatrices sys;
  ConstraintBoxes boxes;

  /// f(x) = g sin(x₁) − c x₂ / (m l).
  Eigen::VectorXd residual(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// A = [1 tₛ; 0 1], B = [0; tₛ/(m l²)], D = [0; tₛ/l], C = [1 0] with
/// |u| ≤ 3 and |x| ≤ (π/2, 5).
PlantModel pendulum_plant(const PendulumParameters& params = {});

/// One step of the true nonlinear dynamics.
Eigen::VectorXd plant_step(const PlantModel& plant, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u);

}  // namespace nnmpc

#pragma once

#include <Eigen/Dense>

namespace nnmpc {

/// Elementwise interval [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
  }
  /// Throws std::invalid_argument unless lower ≤ upper and both are finite.
  void validate(const char* what) const;
};

/// Interval hull of { M v : v ∈ box }.
Box image_box(const Eigen::MatrixXd& M, const Box& box);

/// x⁺ = A x + B u + D f(x, u),  y = C x.
struct SystemMatrices {
  Eigen::MatrixXd A, B, C, D;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
  int nonlinearity_dim() const { return static_cast<int>(D.cols()); }
  void validate() const;
};

/// State and input constraint boxes X and U.
struct ConstraintBoxes {
  Box state;
  Box input;

  /// [x; u] box fed to the network.
  Box network_input() const;
};

}  // namespace nnmpc

#include "nnmpc/system.hpp"

#include <stdexcept>
#include <string>

namespace nnmpc {

void Box::validate(const char* what) const {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument(std::string(what) + ": bound lengths differ");
  }
  if (!lower.allFinite() || !upper.allFinite() || (lower.array() > upper.array()).any()) {
    throw std::invalid_argument(std::string(what) + ": invalid box");
  }
}

Box image_box(const Eigen::MatrixXd& M, const Box& box) {
  const Eigen::MatrixXd pos = M.cwiseMax(0.0);
  const Eigen::MatrixXd neg = M.cwiseMin(0.0);
  return {pos * box.lower + neg * box.upper, pos * box.upper + neg * box.lower};
}

void SystemMatrices::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || D.rows() != n || C.cols() != n) {
    throw std::invalid_argument("SystemMatrices: inconsistent dimensions");
  }
}

Box ConstraintBoxes::network_input() const {
  Box b;
  b.lower.resize(state.dim() + input.dim());
  b.upper.resize(state.dim() + input.dim());
  b.lower << state.lower, input.lower;
  b.upper << state.upper, input.upper;
  return b;
}

}  // namespace nnmpc

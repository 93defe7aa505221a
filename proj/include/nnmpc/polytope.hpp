#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "nnmpc/system.hpp"

namespace nnmpc {

/// Halfspace set { x : H x ≤ h }.
class Polytope {
 public:
  Polytope() = default;
  /// Throws std::invalid_argument on shape mismatch, non-finite data or an
  /// all-zero row.
  Polytope(Eigen::MatrixXd H, Eigen::VectorXd h);

  static Polytope from_box(const Box& box);

  int dim() const { return static_cast<int>(H_.cols()); }
  int num_rows() const { return static_cast<int>(H_.rows()); }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::VectorXd& h() const { return h_; }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 1e-9) const;

  /// { x + shift : x ∈ this }.
  Polytope translated(const Eigen::Ref<const Eigen::VectorXd>& shift) const;

  /// Rows of both sets.
  Polytope intersect(const Polytope& other) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::VectorXd h_;
};

/// max cᵀx over p; empty when the LP is unbounded, infeasible or unsolved.
std::optional<double> maximize_linear(const Polytope& p, const Eigen::Ref<const Eigen::VectorXd>& c);

/// Drops every row whose maximum over the remaining rows stays within
/// h_j + 1e-9 (one LP per row). Rows whose LP is unbounded or unsolved are
/// kept.
Polytope remove_redundant(const Polytope& p);

// {"dim": n, "H": [[...], ...], "h": [...]}, 17 significant digits.
std::string polytope_to_text(const Polytope& p);
Polytope polytope_from_text(const std::string& text);
void save_polytope(const Polytope& p, const std::filesystem::path& path);
Polytope load_polytope(const std::filesystem::path& path);

}  // namespace nnmpc

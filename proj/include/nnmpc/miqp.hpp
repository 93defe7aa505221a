#pragma once

#include <string_view>
#include <vector>

#include "nnmpc/qp.hpp"

namespace nnmpc {

/// Convex QP with some variables restricted to {0, 1}. Each binary must have
/// a `0 ≤ x_j ≤ 1` row (single unit coefficient) in the base problem; the
/// branch-and-bound fixes variables by tightening that row.
class MiqpProblem {
 public:
  MiqpProblem(QpProblem base, std::vector<int> binary_indices);

  const QpProblem& base() const { return base_; }
  const std::vector<int>& binary_indices() const { return binaries_; }
  /// Row of `base().A()` holding the [0, 1] bound of `binary_indices()[k]`.
  const std::vector<int>& bound_rows() const { return bound_rows_; }
  int num_binaries() const { return static_cast<int>(binaries_.size()); }

  /// Base problem with binary k fixed to `values[k]` wherever values[k] ≥ 0.
  QpProblem restricted(const std::vector<int>& values) const;

 private:
  QpProblem base_;
  std::vector<int> binaries_;
  std::vector<int> bound_rows_;
};

enum class MiqpStatus { kOptimal, kInfeasible, kNodeLimit };

std::string_view to_string(MiqpStatus status);

struct MiqpSolution {
  MiqpStatus status = MiqpStatus::kInfeasible;
  Eigen::VectorXd x;  // binaries exactly 0 or 1
  double objective = kInf;
  double best_bound = -kInf;
  double gap = kInf;  // (objective - best_bound) / max(1, |objective|)
  int nodes = 0;      // relaxations solved
  int failed_relaxations = 0;
  double root_bound = -kInf;
  std::vector<double> incumbent_history;
};

struct MiqpSettings {
  double gap_tol = 1e-6;
  int node_limit = 20000;
  double integrality_tol = 1e-6;
  // Rounding heuristic runs at the root, then every `heuristic_period` nodes.
  int heuristic_period = 16;
  QpSettings qp;
};

/// Best-bound branch-and-bound with most-fractional branching (ties to the
/// lowest variable index) and the down branch solved first.
MiqpSolution solve_miqp(const MiqpProblem& problem, const MiqpSettings& settings = {});

/// Solves one QP per binary assignment and keeps the best. At most 20
/// binaries.
MiqpSolution enumerate_binaries(const MiqpProblem& problem, const QpSettings& qp = {});

}  // namespace nnmpc

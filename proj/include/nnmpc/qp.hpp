#pragma once

#include <limits>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace nnmpc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Convex QP
///
///   minimize    ½ xᵀ P x + qᵀ x + c0
///   subject to  l ≤ A x ≤ u
///
/// Rows with l = u are equalities; ±inf bounds are allowed. P = 0 (an LP) is
/// legal. The problem is validated once at construction (shapes, finite data,
/// symmetric P, P ⪰ 0 within 1e-9 relative) and immutable afterwards.
class QpProblem {
 public:
  QpProblem() = default;
  QpProblem(SparseMatrix P, Eigen::VectorXd q, double c0, SparseMatrix A,
            Eigen::VectorXd l, Eigen::VectorXd u);
  QpProblem(const Eigen::MatrixXd& P, Eigen::VectorXd q, double c0,
            const Eigen::MatrixXd& A, Eigen::VectorXd l, Eigen::VectorXd u);

  int num_variables() const { return static_cast<int>(q_.size()); }
  int num_constraints() const { return static_cast<int>(A_.rows()); }

  const SparseMatrix& P() const { return P_; }
  const Eigen::VectorXd& q() const { return q_; }
  double c0() const { return c0_; }
  const SparseMatrix& A() const { return A_; }
  const Eigen::VectorXd& l() const { return l_; }
  const Eigen::VectorXd& u() const { return u_; }

  double objective(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Largest bound violation of `x` over all rows.
  double constraint_violation(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Same P, q, A with new row bounds (used by branch-and-bound nodes).
  QpProblem with_row_bounds(Eigen::VectorXd l, Eigen::VectorXd u) const;

  /// Same problem minus one constraint row.
  QpProblem without_row(int row) const;

 private:
  void check_bounds() const;

  SparseMatrix P_;
  Eigen::VectorXd q_;
  double c0_ = 0.0;
  SparseMatrix A_;
  Eigen::VectorXd l_;
  Eigen::VectorXd u_;
};

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kIterLimit };

std::string_view to_string(QpStatus status);

struct QpSolution {
  QpStatus status = QpStatus::kIterLimit;
  Eigen::VectorXd x;
  // Row multipliers: y_i > 0 when the upper bound is active, y_i < 0 for the
  // lower bound, so that P x + q + Aᵀ y = 0 at the optimum.
  Eigen::VectorXd y;
  double objective = kInf;
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double gap = kInf;
};

struct QpSettings {
  double tol_abs = 1e-8;
  double tol_rel = 1e-8;
  int max_iter = 200;
  // Iterations without primal progress (residual stuck above 1e-6) before
  // the problem is declared infeasible.
  int stall_window = 30;
  double certificate_tol = 1e-7;
};

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

/// Scaled KKT residuals of a candidate primal/dual pair.
struct KktResiduals {
  double primal = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& problem,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace nnmpc

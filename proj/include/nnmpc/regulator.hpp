#pragma once

#include <Eigen/Dense>

namespace nnmpc {

/// LQR design for x⁺ = A x + B u with u = K x (the minus sign lives in K).
struct LqrDesign {
  Eigen::MatrixXd A, B, Q, R;
  Eigen::MatrixXd P;  // stabilizing DARE solution
  Eigen::MatrixXd K;  // -(R + BᵀPB)⁻¹ BᵀPA
  double dare_residual = 0.0;
  double spectral_radius = 0.0;  // of A + BK
};

/// Riccati fixed-point recursion P ← AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q from
/// P = Q, stopped once successive iterates differ by at most `tol` in
/// max-norm (or stop improving at round-off level). Throws std::runtime_error if that does not happen within
/// `max_iter` steps or the final DARE residual exceeds 1e-8.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double tol = 1e-10, int max_iter = 10000);

/// Max-norm of AᵀPA − P − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q.
double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P);

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

double spectral_radius(const Eigen::MatrixXd& M);

/// Solves the DARE, forms K and checks ρ(A + BK) < 1 (throws otherwise).
LqrDesign design_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

}  // namespace nnmpc

#include "nnmpc/regulator.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace nnmpc {
namespace {

void check_inputs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m) {
    throw std::invalid_argument("LQR: inconsistent matrix dimensions");
  }
  if (!Q.isApprox(Q.transpose(), 1e-12) && (Q - Q.transpose()).norm() > 1e-12) {
    throw std::invalid_argument("LQR: Q must be symmetric");
  }
  Eigen::LDLT<Eigen::MatrixXd> q_ldlt(Q);
  if (q_ldlt.info() != Eigen::Success || (q_ldlt.vectorD().array() < -1e-12).any()) {
    throw std::invalid_argument("LQR: Q must be positive semidefinite");
  }
  Eigen::LLT<Eigen::MatrixXd> r_llt(R);
  if (r_llt.info() != Eigen::Success) {
    throw std::invalid_argument("LQR: R must be positive definite");
  }
}

Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  return A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
}

}  // namespace

double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P) {
  return (riccati_map(A, B, Q, R, P) - P).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double tol, int max_iter) {
  check_inputs(A, B, Q, R);
  Eigen::MatrixXd P = Q;
  // Steps stuck at round-off level for a few iterations also count as
  // converged; the residual check below still applies.
  double best_step = std::numeric_limits<double>::infinity();
  int flat = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd next = riccati_map(A, B, Q, R, P);
    next = 0.5 * (next + next.transpose()).eval();
    const double step = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    const double roundoff = 1e-13 * std::max(1.0, P.cwiseAbs().maxCoeff());
    if (step < best_step) {
      best_step = step;
      flat = 0;
    } else if (step <= roundoff) {
      ++flat;
    }
    if (step <= tol || flat >= 5) {
      const double residual = dare_residual(A, B, Q, R, P);
      if (residual > 1e-8) {
        throw std::runtime_error("solve_dare: residual " + std::to_string(residual) +
                                 " above 1e-8 after convergence");
      }
      return P;
    }
  }
  throw std::runtime_error("solve_dare: no convergence in " + std::to_string(max_iter) +
                           " iterations; (A, B) may be nearly uncontrollable");
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  return -S.ldlt().solve(B.transpose() * P * A);
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

LqrDesign design_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  LqrDesign d{A, B, Q, R, {}, {}, 0.0, 0.0};
  d.P = solve_dare(A, B, Q, R);
  d.K = lqr_gain(A, B, R, d.P);
  d.dare_residual = dare_residual(A, B, Q, R, d.P);
  d.spectral_radius = spectral_radius(A + B * d.K);
  if (!(d.spectral_radius < 1.0)) {
    throw std::runtime_error("design_lqr: A + BK is not Schur stable (rho = " +
                             std::to_string(d.spectral_radius) + ")");
  }
  return d;
}

}  // namespace nnmpc

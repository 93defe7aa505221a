#include "nnmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

namespace nnmpc {
namespace {

double inf_norm(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

void check_psd(const SparseMatrix& P) {
  const int n = static_cast<int>(P.rows());
  if (n == 0 || P.nonZeros() == 0) return;
  double scale = 1.0;
  for (int k = 0; k < P.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(P, k); it; ++it) {
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  const SparseMatrix sym_diff = SparseMatrix(P.transpose()) - P;
  for (int k = 0; k < sym_diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(sym_diff, k); it; ++it) {
      if (std::abs(it.value()) > 1e-9 * scale) {
        throw std::invalid_argument("QpProblem: P is not symmetric");
      }
    }
  }
  // Inertia of P + εI: every LDLᵀ pivot must be positive.
  SparseMatrix shifted = P;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += 1e-9 * scale;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw std::invalid_argument("QpProblem: P is not positive semidefinite");
  }
}

// Rows of l ≤ Ax ≤ u split into equalities E x = b and one-sided
// inequalities G x ≤ h.
struct StandardForm {
  SparseMatrix E;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  std::vector<int> eq_row;     // original row of each equality
  std::vector<int> ineq_row;   // original row of each inequality
  std::vector<double> ineq_sign;  // +1 for upper, -1 for lower
};

StandardForm to_standard_form(const QpProblem& p) {
  const int n = p.num_variables();
  const int m = p.num_constraints();
  const SparseMatrix At = p.A().transpose();  // column r = row r of A
  StandardForm sf;
  std::vector<Eigen::Triplet<double>> e_trip;
  std::vector<Eigen::Triplet<double>> g_trip;
  std::vector<double> b;
  std::vector<double> h;
  for (int r = 0; r < m; ++r) {
    const double lo = p.l()[r];
    const double hi = p.u()[r];
    auto emit = [&](std::vector<Eigen::Triplet<double>>& trip, int row,
                    double sign) {
      for (SparseMatrix::InnerIterator it(At, r); it; ++it) {
        trip.emplace_back(row, static_cast<int>(it.index()), sign * it.value());
      }
    };
    if (lo == hi) {
      emit(e_trip, static_cast<int>(b.size()), 1.0);
      b.push_back(lo);
      sf.eq_row.push_back(r);
      continue;
    }
    if (std::isfinite(hi)) {
      emit(g_trip, static_cast<int>(h.size()), 1.0);
      h.push_back(hi);
      sf.ineq_row.push_back(r);
      sf.ineq_sign.push_back(1.0);
    }
    if (std::isfinite(lo)) {
      emit(g_trip, static_cast<int>(h.size()), -1.0);
      h.push_back(-lo);
      sf.ineq_row.push_back(r);
      sf.ineq_sign.push_back(-1.0);
    }
  }
  sf.E.resize(static_cast<Eigen::Index>(b.size()), n);
  sf.E.setFromTriplets(e_trip.begin(), e_trip.end());
  sf.G.resize(static_cast<Eigen::Index>(h.size()), n);
  sf.G.setFromTriplets(g_trip.begin(), g_trip.end());
  sf.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  sf.h = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  return sf;
}

// Quasi-definite augmented KKT system
//   [ P + ρI   Eᵀ      Gᵀ        ] [dx]   [r1]
//   [ E       -εI      0         ] [dy] = [r2]
//   [ G        0    -(S Z⁻¹ + εI) ] [dz]   [r3]
// factored by sparse LDLᵀ and corrected by iterative refinement against the
// unregularized matrix. Keeping the inequality scaling on its own diagonal
// avoids forming Gᵀ Z S⁻¹ G, whose entries span the squared dynamic range.
class KktSolver {
 public:
  KktSolver(const SparseMatrix& P, const SparseMatrix& E, const SparseMatrix& G)
      : P_(P), E_(E), G_(G), n_(static_cast<int>(P.rows())), me_(static_cast<int>(E.rows())),
        mi_(static_cast<int>(G.rows())) {}

  // `winv` = s / z. Retries with 100× stronger regularization after a zero
  // pivot; the refinement in solve() still targets the unregularized matrix.
  bool factor(const Eigen::VectorXd& winv) {
    winv_ = winv;
    for (double boost = 1.0; boost <= 1e8; boost *= 100.0) {
      if (factor_with(boost)) return true;
    }
    return false;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    for (int iter = 0; iter < kRefineSteps; ++iter) {
      const Eigen::VectorXd res = rhs - apply(sol);
      if (inf_norm(res) <= 1e-14 * std::max(1.0, inf_norm(rhs))) break;
      sol += ldlt_.solve(res);
    }
    return sol;
  }

 private:
  bool factor_with(double boost) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(P_.nonZeros() + 2 * E_.nonZeros() +
                                          2 * G_.nonZeros() + n_ + me_ + mi_));
    for (int k = 0; k < P_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(P_, k); it; ++it) {
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    auto add_block = [&](const SparseMatrix& M, int offset) {
      for (int k = 0; k < M.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
          const int r = offset + static_cast<int>(it.row());
          const int c = static_cast<int>(it.col());
          trip.emplace_back(r, c, it.value());
          trip.emplace_back(c, r, it.value());
        }
      }
    };
    add_block(E_, n_);
    add_block(G_, n_ + me_);
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, boost * kPrimalReg);
    for (int i = 0; i < me_; ++i) trip.emplace_back(n_ + i, n_ + i, -boost * kDualReg);
    for (int i = 0; i < mi_; ++i) {
      trip.emplace_back(n_ + me_ + i, n_ + me_ + i, -winv_[i] - boost * kDualReg);
    }
    const int dim = n_ + me_ + mi_;
    SparseMatrix K(dim, dim);
    K.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    ldlt_.factorize(K);
    return ldlt_.info() == Eigen::Success;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n_ + me_ + mi_);
    const auto vx = v.head(n_);
    const auto vy = v.segment(n_, me_);
    const auto vz = v.tail(mi_);
    out.head(n_) = P_ * vx;
    if (me_ > 0) {
      out.head(n_) += E_.transpose() * vy;
      out.segment(n_, me_) = E_ * vx;
    }
    if (mi_ > 0) {
      out.head(n_) += G_.transpose() * vz;
      out.tail(mi_) = G_ * vx - winv_.cwiseProduct(vz);
    }
    return out;
  }

  static constexpr double kPrimalReg = 1e-9;
  static constexpr double kDualReg = 1e-9;
  static constexpr int kRefineSteps = 6;

  const SparseMatrix& P_;
  const SparseMatrix& E_;
  const SparseMatrix& G_;
  int n_;
  int me_;
  int mi_;
  Eigen::VectorXd winv_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// Farkas-type certificate for l ≤ Ax ≤ u: Aᵀy ≈ 0 and uᵀy₊ + lᵀy₋ < 0.
bool primal_infeasibility_certificate(const QpProblem& p,
                                      const Eigen::VectorXd& y, double tol) {
  const double ny = inf_norm(y);
  if (!(ny > 0.0) || !std::isfinite(ny)) return false;
  Eigen::VectorXd yn = y / ny;
  // Entries at noise level carry no sign information.
  yn = (yn.array().abs() <= tol).select(0.0, yn);
  if (inf_norm(p.A().transpose() * yn) > tol) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < yn.size(); ++i) {
    if (yn[i] > 0.0) {
      if (!std::isfinite(p.u()[i])) return false;
      support += p.u()[i] * yn[i];
    } else if (yn[i] < 0.0) {
      if (!std::isfinite(p.l()[i])) return false;
      support += p.l()[i] * yn[i];
    }
  }
  return support < -tol;
}

// Recession direction d with P d = 0, qᵀd < 0 and A d in the recession cone
// of [l, u].
bool dual_infeasibility_certificate(const QpProblem& p, const Eigen::VectorXd& d,
                                    double tol) {
  const double nd = inf_norm(d);
  if (!(nd > 0.0) || !std::isfinite(nd)) return false;
  const Eigen::VectorXd dn = d / nd;
  if (p.q().dot(dn) >= -tol) return false;
  if (inf_norm(p.P() * dn) > tol) return false;
  const Eigen::VectorXd ad = p.A() * dn;
  for (Eigen::Index i = 0; i < ad.size(); ++i) {
    if (std::isfinite(p.u()[i]) && ad[i] > tol) return false;
    if (std::isfinite(p.l()[i]) && ad[i] < -tol) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kUnbounded: return "unbounded";
    case QpStatus::kIterLimit: return "iter_limit";
  }
  return "unknown";
}

QpProblem::QpProblem(SparseMatrix P, Eigen::VectorXd q, double c0,
                     SparseMatrix A, Eigen::VectorXd l, Eigen::VectorXd u)
    : P_(std::move(P)), q_(std::move(q)), c0_(c0), A_(std::move(A)),
      l_(std::move(l)), u_(std::move(u)) {
  const auto n = q_.size();
  if (P_.rows() != n || P_.cols() != n) {
    throw std::invalid_argument("QpProblem: P must be n x n");
  }
  if (A_.cols() != n || l_.size() != A_.rows() || u_.size() != A_.rows()) {
    throw std::invalid_argument("QpProblem: constraint shapes disagree");
  }
  P_.makeCompressed();
  A_.makeCompressed();
  for (int k = 0; k < P_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(P_, k); it; ++it) {
      if (!std::isfinite(it.value())) throw std::invalid_argument("QpProblem: non-finite P");
    }
  }
  for (int k = 0; k < A_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
      if (!std::isfinite(it.value())) throw std::invalid_argument("QpProblem: non-finite A");
    }
  }
  if (!q_.allFinite() || !std::isfinite(c0_)) {
    throw std::invalid_argument("QpProblem: non-finite linear cost");
  }
  check_bounds();
  check_psd(P_);
}

QpProblem::QpProblem(const Eigen::MatrixXd& P, Eigen::VectorXd q, double c0,
                     const Eigen::MatrixXd& A, Eigen::VectorXd l, Eigen::VectorXd u)
    : QpProblem(SparseMatrix(P.sparseView()), std::move(q), c0,
                SparseMatrix(A.sparseView()), std::move(l),
                std::move(u)) {}

void QpProblem::check_bounds() const {
  for (Eigen::Index i = 0; i < l_.size(); ++i) {
    if (std::isnan(l_[i]) || std::isnan(u_[i]) || l_[i] > u_[i] ||
        l_[i] == kInf || u_[i] == -kInf) {
      throw std::invalid_argument("QpProblem: invalid bounds on row " +
                                  std::to_string(i));
    }
  }
}

double QpProblem::objective(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return 0.5 * x.dot(P_ * x) + q_.dot(x) + c0_;
}

double QpProblem::constraint_violation(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd ax = A_ * x;
  double v = 0.0;
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    v = std::max({v, l_[i] - ax[i], ax[i] - u_[i]});
  }
  return v;
}

QpProblem QpProblem::with_row_bounds(Eigen::VectorXd l, Eigen::VectorXd u) const {
  if (l.size() != l_.size() || u.size() != u_.size()) {
    throw std::invalid_argument("with_row_bounds: length mismatch");
  }
  QpProblem copy = *this;
  copy.l_ = std::move(l);
  copy.u_ = std::move(u);
  copy.check_bounds();
  return copy;
}

QpProblem QpProblem::without_row(int row) const {
  if (row < 0 || row >= num_constraints()) {
    throw std::out_of_range("without_row: bad index");
  }
  const int m = num_constraints();
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (r == row) continue;
      trip.emplace_back(r < row ? r : r - 1, static_cast<int>(it.col()), it.value());
    }
  }
  QpProblem copy = *this;
  copy.A_.resize(m - 1, num_variables());
  copy.A_.setFromTriplets(trip.begin(), trip.end());
  copy.l_.resize(m - 1);
  copy.u_.resize(m - 1);
  copy.l_ << l_.head(row), l_.tail(m - row - 1);
  copy.u_ << u_.head(row), u_.tail(m - row - 1);
  return copy;
}

KktResiduals kkt_residuals(const QpProblem& p,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  KktResiduals r;
  r.primal = p.constraint_violation(x);
  r.stationarity = inf_norm(p.P() * x + p.q() + p.A().transpose() * y);
  const Eigen::VectorXd ax = p.A() * x;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double c = 0.0;
    if (y[i] > 0.0) {
      c = std::isfinite(p.u()[i]) ? y[i] * std::abs(p.u()[i] - ax[i]) : kInf;
    } else if (y[i] < 0.0) {
      c = std::isfinite(p.l()[i]) ? -y[i] * std::abs(ax[i] - p.l()[i]) : kInf;
    }
    r.complementarity = std::max(r.complementarity, c);
  }
  return r;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
  const int n = problem.num_variables();
  const StandardForm sf = to_standard_form(problem);
  const int me = static_cast<int>(sf.E.rows());
  const int mi = static_cast<int>(sf.G.rows());
  const SparseMatrix& P = problem.P();
  const Eigen::VectorXd& q = problem.q();

  QpSolution sol;
  KktSolver kkt(P, sf.E, sf.G);

  // Newton step for the residuals (rd, re, rg, rc) with W = z/s.
  auto newton = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& rd, const Eigen::VectorXd& re,
                    const Eigen::VectorXd& rg, const Eigen::VectorXd& rc,
                    Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                    Eigen::VectorXd& dz, Eigen::VectorXd& ds) {
    Eigen::VectorXd rhs(n + me + mi);
    rhs.head(n) = -rd;
    rhs.segment(n, me) = -re;
    if (mi > 0) rhs.tail(mi) = -rg + (rc.array() / z.array()).matrix();
    const Eigen::VectorXd d = kkt.solve(rhs);
    dx = d.head(n);
    dy = d.segment(n, me);
    if (mi > 0) {
      dz = d.tail(mi);
      ds = -(rc.array() + s.array() * dz.array()) / z.array();
    } else {
      ds.resize(0);
      dz.resize(0);
    }
  };

  // Initial point: least-squares style solve with W = I.
  Eigen::VectorXd x(n), y(me), z(mi), s(mi);
  {
    if (!kkt.factor(Eigen::VectorXd::Ones(mi))) {
      sol.status = QpStatus::kIterLimit;
      return sol;
    }
    Eigen::VectorXd rhs(n + me + mi);
    rhs << -q, sf.b, sf.h;
    const Eigen::VectorXd d = kkt.solve(rhs);
    x = d.head(n);
    y = d.segment(n, me);
    if (mi > 0) {
      s = sf.h - sf.G * x;
      z = -s;
      const double shift_s = std::max(0.0, -s.minCoeff());
      const double shift_z = std::max(0.0, -z.minCoeff());
      s.array() += shift_s + 1.0;
      z.array() += shift_z + 1.0;
    }
  }

  const double b_norm = inf_norm(sf.b);
  const double h_norm = inf_norm(sf.h);
  const double q_norm = inf_norm(q);
  double best_primal = kInf;
  int stall = 0;

  struct Iterate {
    Eigen::VectorXd x, y, z, s;
    double primal_res, dual_res, gap;
  };
  constexpr int kMaxPolishSteps = 3;
  std::optional<Iterate> accepted;
  int polish_steps = 0;
  auto restore_accepted = [&]() {
    if (!accepted) return false;
    x = accepted->x;
    y = accepted->y;
    z = accepted->z;
    s = accepted->s;
    sol.primal_residual = accepted->primal_res;
    sol.dual_residual = accepted->dual_res;
    sol.gap = accepted->gap;
    sol.status = QpStatus::kOptimal;
    return true;
  };
  Eigen::VectorXd dx, dy, dz, ds;
  auto full_multipliers = [&](const Eigen::VectorXd& ye, const Eigen::VectorXd& zi) {
    Eigen::VectorXd yf = Eigen::VectorXd::Zero(problem.num_constraints());
    if (ye.size() != me || zi.size() != mi) return yf;
    for (int i = 0; i < me; ++i) yf[sf.eq_row[i]] += ye[i];
    for (int i = 0; i < mi; ++i) yf[sf.ineq_row[i]] += sf.ineq_sign[i] * zi[i];
    return yf;
  };
  // Numerical breakdown with diverging multipliers is reported as
  // infeasibility when a looser certificate holds.
  auto breakdown = [&]() {
    if (restore_accepted()) return;
    constexpr double kLooseCertificate = 1e-5;
    const bool farkas =
        sol.primal_residual > settings.tol_abs &&
        (primal_infeasibility_certificate(problem, full_multipliers(y, z), kLooseCertificate) ||
         primal_infeasibility_certificate(problem, full_multipliers(dy, dz), kLooseCertificate));
    sol.status = farkas ? QpStatus::kInfeasible : QpStatus::kIterLimit;
  };

  for (int iter = 0; iter <= settings.max_iter; ++iter) {
    sol.iterations = iter;
    const Eigen::VectorXd Px = P * x;
    const Eigen::VectorXd Ety = sf.E.transpose() * y;
    const Eigen::VectorXd Gtz = sf.G.transpose() * z;
    const Eigen::VectorXd rd = Px + q + Ety + Gtz;
    const Eigen::VectorXd Ex = sf.E * x;
    const Eigen::VectorXd Gx = sf.G * x;
    const Eigen::VectorXd re = Ex - sf.b;
    const Eigen::VectorXd rg = Gx + s - sf.h;
    const double gap = mi > 0 ? s.dot(z) : 0.0;
    const double pobj = 0.5 * x.dot(Px) + q.dot(x);

    const double eq_res = inf_norm(re);
    // Slack s > 0, so the inequality violation is bounded by max(Gx - h, 0).
    double ineq_res = 0.0;
    for (int i = 0; i < mi; ++i) ineq_res = std::max(ineq_res, Gx[i] - sf.h[i]);
    const double primal_res = std::max(eq_res, ineq_res);
    const double dual_res = inf_norm(rd);
    const double primal_scale = std::max({inf_norm(Ex), inf_norm(Gx), b_norm, h_norm});
    const double dual_scale =
        std::max({inf_norm(Px), q_norm, inf_norm(Ety), inf_norm(Gtz)});
    sol.primal_residual = primal_res;
    sol.dual_residual = dual_res;
    sol.gap = gap;

    auto converged = [&](double factor) {
      const double ta = factor * settings.tol_abs;
      const double tr = factor * settings.tol_rel;
      return primal_res <= ta + tr * primal_scale &&
             inf_norm(rg) <= ta + tr * primal_scale &&
             dual_res <= ta + tr * dual_scale &&
             gap <= ta + tr * std::max(1.0, std::abs(pobj));
    };
    // Once the requested tolerances hold, take a few more steps towards a
    // hundredfold tighter point; the latest accepted iterate is the
    // fallback.
    if (converged(1e-2)) {
      sol.status = QpStatus::kOptimal;
      break;
    }
    if (converged(1.0)) {
      accepted = Iterate{x, y, z, s, primal_res, dual_res, gap};
      if (++polish_steps > kMaxPolishSteps) {
        restore_accepted();
        break;
      }
    }
    if (iter == settings.max_iter) {
      breakdown();
      break;
    }

    // Infeasibility: certificates on the current multipliers and on the
    // last multiplier step, then stall.
    if (iter > 0) {
      if (primal_res > settings.tol_abs &&
          (primal_infeasibility_certificate(problem, full_multipliers(y, z),
                                            settings.certificate_tol) ||
           primal_infeasibility_certificate(problem, full_multipliers(dy, dz),
                                            settings.certificate_tol))) {
        sol.status = QpStatus::kInfeasible;
        break;
      }
      if (dx.size() == n && dual_res > settings.tol_abs &&
          dual_infeasibility_certificate(problem, dx, settings.certificate_tol) &&
          inf_norm(x) > 1e6) {
        sol.status = QpStatus::kUnbounded;
        break;
      }
    }
    if (primal_res < 0.5 * best_primal) {
      best_primal = primal_res;
      stall = 0;
    } else if (primal_res > 1e-6 && ++stall >= settings.stall_window) {
      sol.status = QpStatus::kInfeasible;
      break;
    }

    Eigen::VectorXd winv(mi);
    if (mi > 0) winv = s.array() / z.array();
    if (!kkt.factor(winv)) {
      breakdown();
      break;
    }

    // Predictor.
    Eigen::VectorXd rc(mi);
    if (mi > 0) rc = s.array() * z.array();
    newton(s, z, rd, re, rg, rc, dx, dy, dz, ds);
    if (mi == 0) {
      x += dx;
      y += dy;
      continue;
    }
    const double alpha_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu = gap / mi;
    const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / mi;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    rc = (s.array() * z.array() + ds.array() * dz.array() - sigma * mu).matrix();
    newton(s, z, rd, re, rg, rc, dx, dy, dz, ds);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite()) {
      breakdown();
      break;
    }
  }

  sol.x = x;
  sol.y = Eigen::VectorXd::Zero(problem.num_constraints());
  for (int i = 0; i < me; ++i) sol.y[sf.eq_row[i]] += y[i];
  for (int i = 0; i < mi; ++i) sol.y[sf.ineq_row[i]] += sf.ineq_sign[i] * z[i];
  sol.objective = sol.status == QpStatus::kOptimal ? problem.objective(x) : kInf;
  return sol;
}

}  // namespace nnmpc

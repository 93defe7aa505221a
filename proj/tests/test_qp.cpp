#include <doctest.h>

#include <random>

#include "nnmpc/qp.hpp"
#include "test_util.hpp"

using namespace nnmpc;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  const Eigen::MatrixXd M = testing::random_matrix(rng, n, n);
  return M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

// Brute-force oracle for min ½xᵀPx + qᵀx s.t. Gx ≤ h with P ≻ 0: try every
// active set, keep the KKT point with nonnegative multipliers.
double active_set_oracle(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                         Eigen::VectorXd& best_x) {
  const int n = static_cast<int>(q.size());
  const int m = static_cast<int>(h.size());
  double best = kInf;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) if (mask & (1 << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = P;
    rhs.head(n) = -q;
    for (int j = 0; j < k; ++j) {
      K.block(0, n + j, n, 1) = G.row(act[j]).transpose();
      K.block(n + j, 0, 1, n) = G.row(act[j]);
      rhs[n + j] = h[act[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if ((G * x - h).maxCoeff() > 1e-9) continue;
    if (k > 0 && sol.tail(k).minCoeff() < -1e-9) continue;
    const double f = 0.5 * x.dot(P * x) + q.dot(x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best;
}

void check_kkt(const QpProblem& p, const QpSolution& s, double tol = 1e-6) {
  const auto r = kkt_residuals(p, s.x, s.y);
  CHECK(r.primal <= tol);
  CHECK(r.stationarity <= tol);
  CHECK(r.complementarity <= tol);
}

}  // namespace

TEST_CASE("clamped minimum of ½‖x‖² with x ≥ 1") {
  QpProblem p(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
              Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2),
              Eigen::VectorXd::Constant(2, kInf));
  const auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.x[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.y[0] < 0.0);  // lower bound active
  check_kkt(p, s, 1e-8);
}

TEST_CASE("symmetric equality projection") {
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  QpProblem p(2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0, A,
              Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 2.0));
  const auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.x[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("equality-constrained QPs match the KKT linear system") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 6;
    const int me = 1 + trial % 3;
    const Eigen::MatrixXd P = random_spd(rng, n);
    const Eigen::VectorXd q = testing::random_vector(rng, n);
    const Eigen::MatrixXd A = testing::random_matrix(rng, me, n);
    const Eigen::VectorXd b = testing::random_vector(rng, me);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = P;
    K.topRightCorner(n, me) = A.transpose();
    K.bottomLeftCorner(me, n) = A;
    Eigen::VectorXd rhs(n + me);
    rhs << -q, b;
    const Eigen::VectorXd oracle = K.fullPivLu().solve(rhs);

    const auto s = solve_qp(QpProblem(P, q, 0.0, A, b, b));
    REQUIRE(s.status == QpStatus::kOptimal);
    CHECK((s.x - oracle.head(n)).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK((s.y - oracle.tail(me)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("inequality QPs match the active-set enumeration oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const int m = 3 + trial % 5;
    const Eigen::MatrixXd P = random_spd(rng, n);
    const Eigen::VectorXd q = testing::random_vector(rng, n, 3.0);
    const Eigen::MatrixXd G = testing::random_matrix(rng, m, n);
    const Eigen::VectorXd h = testing::random_vector(rng, m).cwiseAbs();  // 0 is feasible
    Eigen::VectorXd x_oracle;
    const double f_oracle = active_set_oracle(P, q, G, h, x_oracle);

    QpProblem p(P, q, 0.0, G, Eigen::VectorXd::Constant(m, -kInf), h);
    const auto s = solve_qp(p);
    REQUIRE(s.status == QpStatus::kOptimal);
    CHECK(s.objective == doctest::Approx(f_oracle).epsilon(1e-7));
    CHECK((s.x - x_oracle).cwiseAbs().maxCoeff() <= 1e-5);
    check_kkt(p, s);
    // Duals are only on the active side.
    const Eigen::VectorXd gx = G * s.x;
    for (int i = 0; i < m; ++i) {
      CHECK(s.y[i] >= -1e-9);
      if (s.y[i] > 1e-4) CHECK(gx[i] >= h[i] - 1e-6);
    }
  }
}

TEST_CASE("removing a constraint never increases the optimum") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4;
    const int m = 6;
    const Eigen::MatrixXd P = random_spd(rng, n);
    const Eigen::VectorXd q = testing::random_vector(rng, n, 3.0);
    const Eigen::MatrixXd A = testing::random_matrix(rng, m, n);
    const Eigen::VectorXd u = testing::random_vector(rng, m).cwiseAbs();
    const Eigen::VectorXd l = -u - Eigen::VectorXd::Ones(m);
    const QpProblem full(P, q, 0.0, A, l, u);
    const auto base = solve_qp(full);
    REQUIRE(base.status == QpStatus::kOptimal);
    for (int r = 0; r < m; ++r) {
      const auto reduced = solve_qp(full.without_row(r));
      REQUIRE(reduced.status == QpStatus::kOptimal);
      CHECK(reduced.objective <= base.objective + 1e-8 * std::max(1.0, std::abs(base.objective)));
    }
  }
}

TEST_CASE("linear programs (P = 0)") {
  // max x + y over the unit simplex with a cut.
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 1, 1, 2;
  Eigen::VectorXd l(3), u(3);
  l << 0, 0, -kInf;
  u << kInf, kInf, 2;
  QpProblem p(Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d(-1, -1), 0.5, A, l, u);
  const auto s = solve_qp(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-1.5).epsilon(1e-8));
  CHECK(s.x[0] == doctest::Approx(2.0).epsilon(1e-7));
  check_kkt(p, s);
}

TEST_CASE("infeasible problems are reported") {
  Eigen::MatrixXd A(2, 1);
  A << 1, 1;
  QpProblem p(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.0, A,
              Eigen::Vector2d(1.0, -kInf), Eigen::Vector2d(kInf, 0.0));
  CHECK(solve_qp(p).status == QpStatus::kInfeasible);

  // Conflicting equalities.
  Eigen::MatrixXd E(2, 2);
  E << 1, 1, 1, 1;
  QpProblem q2(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0, E,
               Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1));
  CHECK(solve_qp(q2).status == QpStatus::kInfeasible);
}

TEST_CASE("unbounded LP is reported") {
  Eigen::MatrixXd A(1, 2);
  A << 1, 0;
  QpProblem p(Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d(0, -1), 0.0, A,
              Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0));
  CHECK(solve_qp(p).status == QpStatus::kUnbounded);
}

TEST_CASE("construction rejects non-PSD and malformed problems") {
  Eigen::MatrixXd P(2, 2);
  P << 1, 0, 0, -1;
  CHECK_THROWS_AS(QpProblem(P, Eigen::VectorXd::Zero(2), 0.0, Eigen::MatrixXd::Zero(0, 2),
                            Eigen::VectorXd(0), Eigen::VectorXd(0)),
                  std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 1, 0, 1;
  CHECK_THROWS_AS(QpProblem(asym, Eigen::VectorXd::Zero(2), 0.0, Eigen::MatrixXd::Zero(0, 2),
                            Eigen::VectorXd(0), Eigen::VectorXd(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(QpProblem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0,
                            Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 0),
                            Eigen::Vector2d(0, 0)),
                  std::invalid_argument);
  // PSD but singular is fine.
  Eigen::MatrixXd S = Eigen::MatrixXd::Ones(2, 2);
  CHECK_NOTHROW(QpProblem(S, Eigen::VectorXd::Zero(2), 0.0, Eigen::MatrixXd::Zero(0, 2),
                          Eigen::VectorXd(0), Eigen::VectorXd(0)));
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(13);
  const int n = 6;
  const Eigen::MatrixXd P = random_spd(rng, n);
  const Eigen::VectorXd q = testing::random_vector(rng, n);
  const Eigen::MatrixXd A = testing::random_matrix(rng, 5, n);
  const QpProblem p(P, q, 0.0, A, Eigen::VectorXd::Constant(5, -1.0),
                    Eigen::VectorXd::Constant(5, 1.0));
  const auto a = solve_qp(p);
  const auto b = solve_qp(p);
  CHECK(a.iterations == b.iterations);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

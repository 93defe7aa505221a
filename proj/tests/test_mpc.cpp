#include <doctest.h>

#include <random>

#include "nnmpc/mpc.hpp"
#include "nnmpc/plant.hpp"
#include "nnmpc/regulator.hpp"
#include "test_util.hpp"

using namespace nnmpc;
using namespace nnmpc::testing;

namespace {

ReluNetwork zero_network() {
  return ReluNetwork({{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                      {Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1)}});
}

// relu(x₁ − 2) is inactive, relu(x₁ + 2) active and relu(x₁ − 0.2) unstable on X.
ReluNetwork one_unstable_network() {
  DenseLayer h{Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d(-2, 2, -0.2)};
  h.weight.col(0).setOnes();
  DenseLayer o{Eigen::RowVector3d(1.0, 0.5, 4.0), Eigen::VectorXd::Constant(1, -1.0)};
  return ReluNetwork({h, o});
}

MpcConfig config(int horizon, Method method, const Eigen::MatrixXd& P) {
  MpcConfig c;
  c.horizon = horizon;
  c.Q = Eigen::Vector2d(1e4, 1e-2).asDiagonal();
  c.R = Eigen::MatrixXd::Identity(1, 1);
  c.P = P;
  c.Phi = 10.0 * Eigen::MatrixXd::Identity(1, 1);
  c.method = method;
  return c;
}

ControllerState controller(const ReluNetwork& net, int horizon, Method method,
                           Eigen::VectorXd x_star = Eigen::Vector2d::Zero(),
                           Eigen::VectorXd u_star = Eigen::VectorXd::Zero(1)) {
  const auto plant = pendulum_plant();
  const auto lqr = design_lqr(plant.sys.A, plant.sys.B, Eigen::Vector2d(1e4, 1e-2).asDiagonal(),
                              Eigen::MatrixXd::Identity(1, 1));
  return make_controller(plant.sys, plant.boxes, net, lqr.K, std::move(x_star), std::move(u_star),
                         Polytope::from_box(plant.boxes.state), config(horizon, method, lqr.P));
}

// Solves and returns the optimal point of the relaxation.
QpSolution solve(const QpProblem& qp) {
  const auto sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::kOptimal);
  return sol;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::kMip, Method::kLr, Method::kElr}) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("milp"), std::invalid_argument);
}

TEST_CASE("zero network at the target gives c = 0, u = u* and zero cost") {
  const Eigen::VectorXd u_star = Eigen::VectorXd::Constant(1, 0.0);
  for (Method m : {Method::kMip, Method::kLr, Method::kElr}) {
    const auto st = controller(zero_network(), 1, m);
    const auto r = control_step(st, st.x_star);
    REQUIRE(r.status == StepStatus::kOptimal);
    CHECK(std::abs((*r.u)[0] - u_star[0]) <= 1e-6);
    CHECK(r.c[0].norm() <= 1e-6);
    CHECK(std::abs(r.objective) <= 1e-6);
    CHECK(r.solve_time > 0.0);
  }
  const auto st = controller(zero_network(), 1, Method::kMip);
  CHECK(solve(build_lr(st, st.x_star)).objective ==
        doctest::Approx(solve_miqp(build_mip(st, st.x_star)).objective).epsilon(1e-6));
}

TEST_CASE("MIP optimum matches enumeration over the unstable neuron") {
  const auto st = controller(one_unstable_network(), 2, Method::kMip);
  CHECK(count_status(st.status, NeuronStatus::kUnstable) == 1);
  const Eigen::Vector2d x_t(0.6, -1.0);
  const auto mip = build_mip(st, x_t);
  CHECK(mip.num_binaries() == 2);
  const auto bb = solve_miqp(mip);
  const auto en = enumerate_binaries(mip);
  REQUIRE(bb.status == MiqpStatus::kOptimal);
  REQUIRE(en.status == MiqpStatus::kOptimal);
  CHECK(bb.objective == doctest::Approx(en.objective).epsilon(1e-6));
}

TEST_CASE("MIP predictions follow the network dynamics exactly") {
  std::mt19937_64 rng(21);
  const auto net = random_network(rng, {3, 5, 4, 1}, 0.5);
  const auto st = controller(net, 3, Method::kMip);
  const Eigen::Vector2d x_t(0.4, 0.8);
  const auto p = assemble_mpc(st, x_t, ReluModel::kExact, false);
  const auto sol = solve_miqp(MiqpProblem(p.qp, p.binaries));
  REQUIRE(sol.status == MiqpStatus::kOptimal);
  const auto& L = p.layout;
  CHECK((sol.x.segment(L.x[0], 2) - x_t).norm() <= 1e-9);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd x = sol.x.segment(L.x[k], 2);
    const Eigen::VectorXd u = sol.x.segment(L.u[k], 1);
    Eigen::Vector3d in;
    in << x, u;
    const Eigen::VectorXd next = st.sys.A * x + st.sys.B * u + st.sys.D * net.forward(in);
    CHECK((sol.x.segment(L.x[k + 1], 2) - next).norm() <= 1e-6);
    const Eigen::VectorXd c = sol.x.segment(L.c[k], 1);
    CHECK((u - (st.K * (x - st.x_star) + st.u_star + c)).norm() <= 1e-9);
    CHECK(std::abs(u[0]) <= 3 + 1e-9);
  }
}

TEST_CASE("relaxation bounds the MIP and contains its optimum") {
  std::mt19937_64 rng(5);
  int solved = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const auto net = random_network(rng, {3, 10, 1});
    const auto st = controller(net, 2, Method::kMip);
    const Eigen::VectorXd x_t = uniform_in_box(rng, Eigen::Vector2d(-0.8, -2), Eigen::Vector2d(0.8, 2));
    const auto mip = assemble_mpc(st, x_t, ReluModel::kExact, false);
    const auto lr = assemble_mpc(st, x_t, ReluModel::kTriangle, false);
    const auto elr = assemble_mpc(st, x_t, ReluModel::kTriangle, true);
    const auto ms = solve_miqp(MiqpProblem(mip.qp, mip.binaries));
    if (ms.status != MiqpStatus::kOptimal) continue;
    ++solved;
    const auto ls = solve(lr.qp);
    const auto es = solve(elr.qp);
    CHECK(ls.objective <= ms.objective + 1e-6 * (1 + std::abs(ms.objective)));
    CHECK(es.objective >= ls.objective - 1e-6 * (1 + std::abs(ls.objective)));
    // Layouts agree up to the binaries, which the relaxation does not have.
    Eigen::VectorXd plug = Eigen::VectorXd::Zero(lr.qp.num_variables());
    auto copy = [&](const std::vector<int>& a, const std::vector<int>& b, int len) {
      for (std::size_t k = 0; k < a.size(); ++k) plug.segment(b[k], len) = ms.x.segment(a[k], len);
    };
    copy(mip.layout.x, lr.layout.x, 2);
    copy(mip.layout.u, lr.layout.u, 1);
    copy(mip.layout.c, lr.layout.c, 1);
    copy(mip.layout.f, lr.layout.f, 1);
    for (std::size_t k = 0; k < mip.layout.nets.size(); ++k) {
      const auto& a = mip.layout.nets[k];
      const auto& b = lr.layout.nets[k];
      copy(a.pre, b.pre, 10);
      copy(a.post, b.post, 10);
    }
    CHECK(lr.qp.constraint_violation(plug) <= 1e-6);
    CHECK(lr.qp.objective(plug) == doctest::Approx(ms.objective).epsilon(1e-6));
  }
  CHECK(solved >= 4);
}

TEST_CASE("zero output weight makes eLR identical to LR") {
  std::mt19937_64 rng(8);
  auto st = controller(random_network(rng, {3, 12, 1}), 2, Method::kElr);
  st.config.Phi.setZero();
  const Eigen::Vector2d x_t(-0.5, 1.0);
  CHECK(solve(build_elr(st, x_t)).objective ==
        doctest::Approx(solve(build_lr(st, x_t)).objective).epsilon(1e-7));
}

TEST_CASE("pruned and unpruned MIPs agree with fewer binaries") {
  auto st = controller(one_unstable_network(), 2, Method::kMip);
  const Eigen::Vector2d x_t(0.3, -0.7);
  const auto pruned = build_mip(st, x_t);
  st.config.prune = false;
  const auto full = build_mip(st, x_t);
  CHECK(pruned.num_binaries() == 2);
  CHECK(full.num_binaries() == 6);
  const auto a = solve_miqp(pruned);
  const auto b = solve_miqp(full);
  REQUIRE(a.status == MiqpStatus::kOptimal);
  REQUIRE(b.status == MiqpStatus::kOptimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
}

TEST_CASE("terminal constraint holds on the predicted final state") {
  std::mt19937_64 rng(2);
  auto st = controller(random_network(rng, {3, 6, 1}, 0.3), 2, Method::kMip);
  const auto plant = pendulum_plant();
  Box small{Eigen::Vector2d(-0.2, -0.5), Eigen::Vector2d(0.2, 0.5)};
  st.terminal = Polytope::from_box(small);
  for (Method m : {Method::kMip, Method::kLr, Method::kElr}) {
    st.config.method = m;
    const auto r = control_step(st, Eigen::Vector2d(0.15, 0.0));
    REQUIRE(r.status == StepStatus::kOptimal);
    REQUIRE(r.x.size() == 3);
    CHECK(st.terminal.contains(r.x.back(), 1e-6));
    CHECK(std::abs((*r.u)[0]) <= 3.0);
  }
}

TEST_CASE("an unreachable terminal set is reported as infeasible") {
  auto st = controller(zero_network(), 1, Method::kLr);
  Box far{Eigen::Vector2d(1.4, 4.5), Eigen::Vector2d(1.5, 5.0)};
  st.terminal = Polytope::from_box(far);
  for (Method m : {Method::kMip, Method::kLr, Method::kElr}) {
    st.config.method = m;
    const auto r = control_step(st, Eigen::Vector2d::Zero());
    CHECK(r.status == StepStatus::kInfeasible);
    CHECK_FALSE(r.u.has_value());
  }
}

TEST_CASE("inconsistent controller data is rejected") {
  auto st = controller(zero_network(), 1, Method::kMip);
  st.config.horizon = 0;
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);
  CHECK_THROWS_AS(controller(zero_network(), 1, Method::kMip, Eigen::Vector3d::Zero()),
                  std::invalid_argument);
}

#include "nnmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace nnmpc {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kMip: return "mip";
    case Method::kLr: return "lr";
    case Method::kElr: return "elr";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "mip") return Method::kMip;
  if (text == "lr") return Method::kLr;
  if (text == "elr") return Method::kElr;
  throw std::invalid_argument("unknown method '" + std::string(text) + "' (mip, lr or elr)");
}

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::kOptimal: return "optimal";
    case StepStatus::kNodeLimit: return "node_limit";
    case StepStatus::kInfeasible: return "infeasible";
    case StepStatus::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

namespace {

bool is_square(const Eigen::MatrixXd& M, int n) { return M.rows() == n && M.cols() == n; }

}  // namespace

void ControllerState::validate() const {
  sys.validate();
  boxes.state.validate("state box");
  boxes.input.validate("input box");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int s = sys.nonlinearity_dim();
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("ControllerState: ") + what);
  };
  if (boxes.state.dim() != n || boxes.input.dim() != m) fail("constraint boxes");
  if (net.input_dim() != n + m || net.output_dim() != s) fail("network dimensions");
  if (K.rows() != m || K.cols() != n) fail("gain K");
  if (x_star.size() != n || u_star.size() != m || f_star.size() != s) fail("target");
  if (terminal.dim() != n) fail("terminal set");
  if (config.horizon < 1) fail("horizon must be at least 1");
  if (!is_square(config.Q, n) || !is_square(config.R, m) || !is_square(config.P, n)) {
    fail("weights Q, R, P");
  }
  if (config.method == Method::kElr && !is_square(config.Phi, s)) fail("weight Phi");
  if (static_cast<int>(bounds.pre_lower.size()) != net.hidden_layer_count()) fail("bounds");
}

ControllerState make_controller(SystemMatrices sys, ConstraintBoxes boxes, ReluNetwork net,
                                Eigen::MatrixXd K, Eigen::VectorXd x_star, Eigen::VectorXd u_star,
                                Polytope terminal, MpcConfig config) {
  const Box in = boxes.network_input();
  ControllerState st{std::move(sys), std::move(boxes), std::move(net), {}, {}, std::move(K),
                     std::move(x_star), std::move(u_star), {}, std::move(terminal),
                     std::move(config)};
  if (st.net.input_dim() != in.dim()) {
    throw std::invalid_argument("make_controller: network input dimension mismatch");
  }
  st.bounds = propagate_bounds(st.net, in.lower, in.upper);
  st.status = classify_neurons(st.bounds);
  Eigen::VectorXd z(in.dim());
  z << st.x_star, st.u_star;
  st.f_star = st.net.forward(z);
  st.validate();
  return st;
}

MpcProblem assemble_mpc(const ControllerState& state, const Eigen::VectorXd& x_t,
                        ReluModel model, bool output_penalty) {
  const auto& sys = state.sys;
  const auto& cfg = state.config;
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int s = sys.nonlinearity_dim();
  const int N = cfg.horizon;
  if (x_t.size() != n) throw std::invalid_argument("assemble_mpc: state dimension mismatch");
  if (output_penalty && !is_square(cfg.Phi, s)) {
    throw std::invalid_argument("assemble_mpc: Phi has the wrong shape");
  }
  const EncodingPlan plan =
      cfg.prune ? prune_stable(full_plan(state.net), state.status) : full_plan(state.net);

  ModelBuilder b;
  MpcLayout L;
  for (int k = 0; k <= N; ++k) L.x.push_back(b.add_variables(n));
  for (int k = 0; k < N; ++k) {
    L.u.push_back(b.add_variables(m));
    L.c.push_back(b.add_variables(m));
  }
  for (int i = 0; i < n; ++i) b.fix(L.x[0] + i, x_t[i]);
  for (int k = 1; k <= N; ++k) {
    for (int i = 0; i < n; ++i) {
      b.add_bounds(L.x[k] + i, state.boxes.state.lower[i], state.boxes.state.upper[i]);
    }
  }
  // u − K x − c = u* − K x*
  const Eigen::VectorXd u_offset = state.u_star - state.K * state.x_star;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < m; ++i) {
      ModelBuilder::Terms t{{L.u[k] + i, 1.0}, {L.c[k] + i, -1.0}};
      for (int j = 0; j < n; ++j) t.emplace_back(L.x[k] + j, -state.K(i, j));
      b.add_equality(t, u_offset[i]);
      b.add_bounds(L.u[k] + i, state.boxes.input.lower[i], state.boxes.input.upper[i]);
    }
    std::vector<int> inputs;
    for (int j = 0; j < n; ++j) inputs.push_back(L.x[k] + j);
    for (int j = 0; j < m; ++j) inputs.push_back(L.u[k] + j);
    L.nets.push_back(encode_network(b, state.net, state.bounds, plan, model, inputs));
    L.f.push_back(L.nets.back().output);
    // x(k+1) − A x(k) − B u(k) − D f(k) = 0
    for (int r = 0; r < n; ++r) {
      ModelBuilder::Terms t{{L.x[k + 1] + r, 1.0}};
      for (int j = 0; j < n; ++j) t.emplace_back(L.x[k] + j, -sys.A(r, j));
      for (int j = 0; j < m; ++j) t.emplace_back(L.u[k] + j, -sys.B(r, j));
      for (int j = 0; j < s; ++j) t.emplace_back(L.f[k] + j, -sys.D(r, j));
      b.add_equality(t, 0.0);
    }
  }
  const auto& H = state.terminal.H();
  const auto& h = state.terminal.h();
  for (int r = 0; r < state.terminal.num_rows(); ++r) {
    ModelBuilder::Terms t;
    for (int j = 0; j < n; ++j) t.emplace_back(L.x[N] + j, H(r, j));
    b.add_row(t, -kInf, h[r]);
  }

  for (int k = 0; k < N; ++k) {
    b.add_weighted_square(L.x[k], cfg.Q, state.x_star);
    b.add_weighted_square(L.u[k], cfg.R, state.u_star);
    if (output_penalty) b.add_weighted_square(L.f[k], cfg.Phi, state.f_star);
  }
  b.add_weighted_square(L.x[N], cfg.P, state.x_star);
  return {b.build_qp(), b.binaries(), std::move(L)};
}

MiqpProblem build_mip(const ControllerState& state, const Eigen::VectorXd& x_t) {
  auto p = assemble_mpc(state, x_t, ReluModel::kExact, false);
  return MiqpProblem(std::move(p.qp), std::move(p.binaries));
}

QpProblem build_lr(const ControllerState& state, const Eigen::VectorXd& x_t) {
  return assemble_mpc(state, x_t, ReluModel::kTriangle, false).qp;
}

QpProblem build_elr(const ControllerState& state, const Eigen::VectorXd& x_t) {
  return assemble_mpc(state, x_t, ReluModel::kTriangle, true).qp;
}

StepResult control_step(const ControllerState& state, const Eigen::VectorXd& x_t) {
  using Clock = std::chrono::steady_clock;
  const auto& cfg = state.config;
  StepResult res;
  const auto t0 = Clock::now();
  const bool exact = cfg.method == Method::kMip;
  MpcProblem p = assemble_mpc(state, x_t, exact ? ReluModel::kExact : ReluModel::kTriangle,
                              cfg.method == Method::kElr);
  res.binaries = static_cast<int>(p.binaries.size());
  const auto t1 = Clock::now();

  Eigen::VectorXd x;
  if (exact) {
    const auto sol = solve_miqp(MiqpProblem(std::move(p.qp), p.binaries), cfg.miqp);
    res.nodes = sol.nodes;
    x = sol.x;
    res.objective = sol.objective;
    switch (sol.status) {
      case MiqpStatus::kOptimal: res.status = StepStatus::kOptimal; break;
      case MiqpStatus::kInfeasible: res.status = StepStatus::kInfeasible; break;
      case MiqpStatus::kNodeLimit:
        res.status = x.size() ? StepStatus::kNodeLimit : StepStatus::kSolverFailure;
        res.message = "node limit reached (gap " + std::to_string(sol.gap) + ")";
        break;
    }
  } else {
    const auto sol = solve_qp(p.qp, cfg.qp);
    res.nodes = 1;
    x = sol.x;
    res.objective = sol.objective;
    switch (sol.status) {
      case QpStatus::kOptimal: res.status = StepStatus::kOptimal; break;
      case QpStatus::kInfeasible: res.status = StepStatus::kInfeasible; break;
      default:
        res.status = StepStatus::kSolverFailure;
        res.message = "QP solver returned " + std::string(to_string(sol.status));
    }
  }
  const auto t2 = Clock::now();
  res.build_time = std::chrono::duration<double>(t1 - t0).count();
  res.solve_time = std::chrono::duration<double>(t2 - t1).count();

  if (res.status == StepStatus::kInfeasible) {
    res.message = "MPC problem infeasible at x = [" + std::to_string(x_t[0]) +
                  (x_t.size() > 1 ? ", " + std::to_string(x_t[1]) : std::string()) + ", ...]";
  }
  if (res.status != StepStatus::kOptimal && res.status != StepStatus::kNodeLimit) return res;

  const auto& L = p.layout;
  const int n = state.sys.state_dim();
  const int m = state.sys.input_dim();
  for (int v : L.x) res.x.push_back(x.segment(v, n));
  for (int v : L.c) res.c.push_back(x.segment(v, m));
  Eigen::VectorXd u = state.K * (x_t - state.x_star) + state.u_star + res.c.front();
  const auto& U = state.boxes.input;
  if (!U.contains(u, 1e-6)) {
    res.status = StepStatus::kSolverFailure;
    res.message = "applied input outside U beyond tolerance";
    return res;
  }
  res.u = u.cwiseMax(U.lower).cwiseMin(U.upper);
  return res;
}

}  // namespace nnmpc

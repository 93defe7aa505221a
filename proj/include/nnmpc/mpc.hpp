#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/encoding.hpp"
#include "nnmpc/miqp.hpp"
#include "nnmpc/polytope.hpp"
#include "nnmpc/relu_network.hpp"
#include "nnmpc/system.hpp"

namespace nnmpc {

enum class Method { kMip, kLr, kElr };

std::string_view to_string(Method method);
/// "mip", "lr" or "elr"; throws std::invalid_argument otherwise.
Method parse_method(std::string_view text);

struct MpcConfig {
  int horizon = 1;
  Eigen::MatrixXd Q, R, P;  // stage and terminal weights
  Eigen::MatrixXd Phi;      // network-output weight, eLR only
  Method method = Method::kMip;
  bool prune = true;        // encode stable neurons as equalities
  MiqpSettings miqp;
  QpSettings qp;
};

/// Everything a control step needs; immutable during a run.
struct ControllerState {
  SystemMatrices sys;
  ConstraintBoxes boxes;
  ReluNetwork net;
  LayerBounds bounds;        // over X × U
  NeuronStatusMap status;
  Eigen::MatrixXd K;
  Eigen::VectorXd x_star, u_star, f_star;
  Polytope terminal;         // X_f in absolute coordinates
  MpcConfig config;

  /// Throws std::invalid_argument on any dimension inconsistency.
  void validate() const;
};

/// Propagates the network bounds over X × U and classifies the neurons.
ControllerState make_controller(SystemMatrices sys, ConstraintBoxes boxes, ReluNetwork net,
                                Eigen::MatrixXd K, Eigen::VectorXd x_star, Eigen::VectorXd u_star,
                                Polytope terminal, MpcConfig config);

/// Variable indices of an assembled MPC problem; entry k is prediction step k + 1.
struct MpcLayout {
  std::vector<int> x;  // N + 1 states
  std::vector<int> u;  // N inputs
  std::vector<int> c;  // N corrections
  std::vector<int> f;  // N network outputs
  std::vector<EncodedNetwork> nets;
};

struct MpcProblem {
  QpProblem qp;
  std::vector<int> binaries;  // empty for the relaxations
  MpcLayout layout;
};

/// Decision variables x(1..N+1), u, c, f and one network copy per step, with
///   x(1) = x_t, x(k+1) = A x(k) + B u(k) + D f(k), u(k) = K(x(k) − x*) + u* + c(k),
///   u(k) ∈ U, x(k) ∈ X for k ≥ 2, x(N+1) ∈ X_f, f̲ ≤ f(k) ≤ f̄,
/// cost V_t (plus Σ‖f(k) − f*‖²_Φ when `output_penalty`).
MpcProblem assemble_mpc(const ControllerState& state, const Eigen::VectorXd& x_t,
                        ReluModel model, bool output_penalty);

MiqpProblem build_mip(const ControllerState& state, const Eigen::VectorXd& x_t);
QpProblem build_lr(const ControllerState& state, const Eigen::VectorXd& x_t);
QpProblem build_elr(const ControllerState& state, const Eigen::VectorXd& x_t);

enum class StepStatus {
  kOptimal,
  kNodeLimit,   // MIP incumbent returned without a gap certificate
  kInfeasible,
  kSolverFailure,
};

std::string_view to_string(StepStatus status);

struct StepResult {
  StepStatus status = StepStatus::kSolverFailure;
  std::optional<Eigen::VectorXd> u;  // applied input; empty unless a solution exists
  std::vector<Eigen::VectorXd> c;    // c*(1..N)
  std::vector<Eigen::VectorXd> x;    // predicted x(1..N+1)
  double objective = kInf;
  double solve_time = 0.0;           // seconds spent in the solver
  double build_time = 0.0;           // seconds spent assembling
  int nodes = 0;
  int binaries = 0;
  std::string message;
};

/// Solves the configured problem at x_t and returns
/// u = K(x_t − x*) + u* + c*(1), clamped to U when outside by at most 1e-6.
StepResult control_step(const ControllerState& state, const Eigen::VectorXd& x_t);

}  // namespace nnmpc

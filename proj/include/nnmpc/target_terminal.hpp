#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "nnmpc/encoding.hpp"
#include "nnmpc/miqp.hpp"
#include "nnmpc/polytope.hpp"
#include "nnmpc/relu_network.hpp"
#include "nnmpc/system.hpp"

namespace nnmpc {

enum class TargetStatus {
  kOptimal,     // equality residual within tolerance
  kInfeasible,  // no admissible steady state for the reference
  kWarning,     // search finished with residual above 1e-4
  kUnresolved,  // exact search stopped at its node limit without a point
};

std::string_view to_string(TargetStatus status);

struct SteadyTarget {
  TargetStatus status = TargetStatus::kInfeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd f;  // f_nn(x, u)
  // Max-norm of [(I − A)x − Bu − D f; Cx − y_r] with f from `forward`.
  double residual = kInf;
  double cost = kInf;  // uᵀ R_s u
  int nodes = 0;       // branch-and-bound nodes (exact method)
  int evaluations = 0; // objective evaluations (search method)
};

/// Residual of the steady-state equalities at (x, u).
double steady_state_residual(const SystemMatrices& sys, const ReluNetwork& net,
                             const Eigen::VectorXd& y_ref, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u);

/// min u_rᵀ R_s u_r over X × U subject to the steady-state equalities, with the
/// network written as its exact mixed-integer encoding.
SteadyTarget steady_state_exact(const SystemMatrices& sys, const ReluNetwork& net,
                                const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                                const ConstraintBoxes& boxes, const MiqpSettings& settings = {});

struct SearchSettings {
  double penalty_weight = 1e6;
  std::uint64_t seed = 0;
  int max_evals = 40000;
};

/// Bounded Nelder–Mead on u_rᵀ R_s u_r + w ‖equality residual‖² over X × U.
SteadyTarget steady_state_search(const SystemMatrices& sys, const ReluNetwork& net,
                                 const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                                 const ConstraintBoxes& boxes, const SearchSettings& settings = {});

/// [f̲ − f*, f̄ − f*]; throws std::invalid_argument if f* lies outside the
/// output bounds.
Box disturbance_box(const LayerBounds& bounds, const Eigen::VectorXd& f_star);

/// Output bounds of the network over its input box from the triangle
/// relaxation, one LP per bound. Never looser than the interval bounds.
Box relaxed_output_bounds(const ReluNetwork& net, const LayerBounds& bounds);

enum class InputRows { kAuto, kAlways, kNever };

std::string_view to_string(InputRows mode);

struct RpiSettings {
  InputRows input_rows = InputRows::kAuto;
  double eps = 1e-9;
  int max_iter = 500;
};

struct RpiResult {
  Polytope set;            // X_δ in error coordinates
  int iterations = 0;      // propagation steps until termination
  bool input_rows = false; // whether u* + Kδx ∈ U was part of Ω₀
  std::string note;        // why input rows were dropped, if they were
};

/// Maximal RPI set of δx⁺ = A_s δx + w, w ∈ w_box, inside
/// Ω₀ = {δx : x* + δx ∈ X [, u* + Kδx ∈ U]}. Each propagated row is tightened
/// by the support of the accumulated disturbance; the iteration stops when
/// every new row is redundant up to `eps`. Throws std::runtime_error if a row
/// offset turns negative (empty set) or `max_iter` is reached. With kAuto the
/// input rows are dropped only if the set with them is empty.
RpiResult compute_rpi(const Eigen::MatrixXd& A_s, const Eigen::MatrixXd& K,
                      const ConstraintBoxes& boxes, const Eigen::VectorXd& x_star,
                      const Eigen::VectorXd& u_star, const Box& w_box,
                      const RpiSettings& settings = {});

/// { x : H x ≤ h + H x* }.
Polytope terminal_set(const Polytope& rpi, const Eigen::VectorXd& x_star);

}  // namespace nnmpc

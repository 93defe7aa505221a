#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnmpc/mpc.hpp"
#include "nnmpc/plant.hpp"
#include "nnmpc/regulator.hpp"
#include "nnmpc/target_terminal.hpp"

namespace nnmpc {

enum class TargetMethod { kExact, kSearch };

std::string_view to_string(TargetMethod method);
TargetMethod parse_target_method(std::string_view text);

/// Which output bounds size the terminal-set disturbance.
enum class DisturbanceBounds {
  kInterval,  // interval propagation only
  kRelaxed,   // triangle-relaxation LP bounds
  kAuto,      // interval first, relaxed if the invariant set is empty
};

std::string_view to_string(DisturbanceBounds mode);
DisturbanceBounds parse_disturbance_bounds(std::string_view text);

struct DesignOptions {
  Eigen::MatrixXd Q, R, Phi, R_s;
  Eigen::VectorXd y_ref;
  TargetMethod target = TargetMethod::kExact;
  SearchSettings search;
  RpiSettings rpi;
  DisturbanceBounds disturbance = DisturbanceBounds::kAuto;
  MpcConfig mpc;  // horizon, method, solver limits; weights are filled in
};

/// Raised when no admissible steady state is available for the reference.
class TargetError : public std::runtime_error {
 public:
  TargetError(TargetStatus status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  TargetStatus status() const { return status_; }

 private:
  TargetStatus status_;
};

struct ControllerDesign {
  ControllerState state;
  LqrDesign lqr;
  SteadyTarget target;
  RpiResult rpi;
  Box disturbance;           // D·δf range used for the invariant set
  std::string disturbance_source;  // "interval" or "relaxed"
};

/// LQR gain, steady-state target, invariant set and terminal set for `net`.
/// Throws TargetError when the target is infeasible or unresolved, std::runtime_error when
/// no invariant set exists.
ControllerDesign design_controller(const PlantModel& plant, const ReluNetwork& net,
                                   const DesignOptions& options);

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;  // state at each step, before the input
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> y;
  std::vector<double> solve_time;
  std::vector<StepStatus> status;
  std::vector<int> nodes;
  int state_violations = 0;  // steps whose state lies outside X
  bool halted = false;       // an infeasible or failed step ended the run
  std::string message;

  int size() const { return static_cast<int>(t.size()); }
};

/// Closed loop u = control_step(x), x ← plant_step(x, u). A step without an
/// applied input is recorded and ends the run.
Trajectory simulate(const ControllerState& controller, const PlantModel& plant,
                    const Eigen::VectorXd& x0, int steps);

struct Metrics {
  double steady_error = 0.0;  // percent, or absolute when `absolute`
  bool absolute = false;      // y_r = 0
  double max_solve_time = 0.0;
  double mean_solve_time = 0.0;
  int window = 0;             // samples averaged
};

/// Mean |y − y_r| / |y_r| · 100 over the final 10% of the recorded steps
/// (at least one); absolute error when y_r = 0.
Metrics metrics(const Trajectory& traj, double y_ref);

/// Columns t,x1,..,xn,u1,..,um,y1,..,yp,solve_time_s,status.
std::string trajectory_to_csv(const Trajectory& traj);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace nnmpc

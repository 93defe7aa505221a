#include "nnmpc/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nnmpc/text_io.hpp"

namespace nnmpc {

std::string_view to_string(TargetMethod method) {
  return method == TargetMethod::kExact ? "exact" : "search";
}

TargetMethod parse_target_method(std::string_view text) {
  if (text == "exact") return TargetMethod::kExact;
  if (text == "search") return TargetMethod::kSearch;
  throw std::invalid_argument("unknown target method '" + std::string(text) +
                              "' (exact or search)");
}

std::string_view to_string(DisturbanceBounds mode) {
  switch (mode) {
    case DisturbanceBounds::kInterval: return "interval";
    case DisturbanceBounds::kRelaxed: return "relaxed";
    case DisturbanceBounds::kAuto: return "auto";
  }
  return "unknown";
}

DisturbanceBounds parse_disturbance_bounds(std::string_view text) {
  if (text == "interval") return DisturbanceBounds::kInterval;
  if (text == "relaxed") return DisturbanceBounds::kRelaxed;
  if (text == "auto") return DisturbanceBounds::kAuto;
  throw std::invalid_argument("unknown disturbance bounds '" + std::string(text) +
                              "' (interval, relaxed or auto)");
}

ControllerDesign design_controller(const PlantModel& plant, const ReluNetwork& net,
                                   const DesignOptions& opt) {
  const auto& sys = plant.sys;
  ControllerDesign d;
  d.lqr = design_lqr(sys.A, sys.B, opt.Q, opt.R);

  d.target = opt.target == TargetMethod::kExact
                 ? steady_state_exact(sys, net, opt.y_ref, opt.R_s, plant.boxes, opt.mpc.miqp)
                 : steady_state_search(sys, net, opt.y_ref, opt.R_s, plant.boxes, opt.search);
  if (d.target.status == TargetStatus::kInfeasible) {
    throw TargetError(d.target.status, "no admissible steady state for the reference (" +
                                           std::string(to_string(opt.target)) + " target)");
  }
  if (d.target.status == TargetStatus::kUnresolved) {
    throw TargetError(d.target.status,
                      "steady-state search hit its node limit without a feasible point");
  }

  const Box in = plant.boxes.network_input();
  const LayerBounds bounds = propagate_bounds(net, in.lower, in.upper);
  const Eigen::MatrixXd As = sys.A + sys.B * d.lqr.K;
  auto attempt = [&](const Box& out, const char* source) {
    LayerBounds b = bounds;
    b.output_lower = out.lower;
    b.output_upper = out.upper;
    d.disturbance = image_box(sys.D, disturbance_box(b, d.target.f));
    d.disturbance_source = source;
    d.rpi = compute_rpi(As, d.lqr.K, plant.boxes, d.target.x, d.target.u, d.disturbance, opt.rpi);
  };
  const Box interval{bounds.output_lower, bounds.output_upper};
  switch (opt.disturbance) {
    case DisturbanceBounds::kInterval: attempt(interval, "interval"); break;
    case DisturbanceBounds::kRelaxed: attempt(relaxed_output_bounds(net, bounds), "relaxed"); break;
    case DisturbanceBounds::kAuto:
      try {
        attempt(interval, "interval");
      } catch (const std::runtime_error&) {
        attempt(relaxed_output_bounds(net, bounds), "relaxed");
      }
      break;
  }

  MpcConfig cfg = opt.mpc;
  cfg.Q = opt.Q;
  cfg.R = opt.R;
  cfg.P = d.lqr.P;
  cfg.Phi = opt.Phi;
  d.state = make_controller(sys, plant.boxes, net, d.lqr.K, d.target.x, d.target.u,
                            terminal_set(d.rpi.set, d.target.x), cfg);
  return d;
}

Trajectory simulate(const ControllerState& controller, const PlantModel& plant,
                    const Eigen::VectorXd& x0, int steps) {
  if (steps < 0) throw std::invalid_argument("simulate: negative step count");
  Trajectory tr;
  Eigen::VectorXd x = x0;
  for (int k = 0; k < steps; ++k) {
    const auto step = control_step(controller, x);
    tr.t.push_back(k * plant.params.ts);
    tr.x.push_back(x);
    tr.y.push_back(plant.sys.C * x);
    tr.solve_time.push_back(step.solve_time);
    tr.status.push_back(step.status);
    tr.nodes.push_back(step.nodes);
    tr.state_violations += !plant.boxes.state.contains(x, 1e-9);
    if (!step.u) {
      tr.u.push_back(Eigen::VectorXd::Constant(plant.sys.input_dim(), std::nan("")));
      tr.halted = true;
      tr.message = "step " + std::to_string(k) + ": " + std::string(to_string(step.status)) +
                   (step.message.empty() ? "" : " (" + step.message + ")");
      break;
    }
    tr.u.push_back(*step.u);
    x = plant_step(plant, x, *step.u);
  }
  return tr;
}

Metrics metrics(const Trajectory& traj, double y_ref) {
  Metrics m;
  const int n = traj.size();
  if (n == 0) throw std::invalid_argument("metrics: empty trajectory");
  m.window = std::max(1, static_cast<int>(std::ceil(0.1 * n)));
  double sum = 0.0;
  for (int k = n - m.window; k < n; ++k) sum += std::abs(traj.y[k][0] - y_ref);
  m.steady_error = sum / m.window;
  m.absolute = y_ref == 0.0;
  if (!m.absolute) m.steady_error *= 100.0 / std::abs(y_ref);
  for (double s : traj.solve_time) {
    m.max_solve_time = std::max(m.max_solve_time, s);
    m.mean_solve_time += s / n;
  }
  return m;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  const auto nx = traj.size() ? traj.x[0].size() : 0;
  const auto nu = traj.size() ? traj.u[0].size() : 0;
  const auto ny = traj.size() ? traj.y[0].size() : 0;
  auto header = [&](const char* base, Eigen::Index count) {
    if (count == 1 && std::string(base) != "x") {
      out << "," << base;
      return;
    }
    for (Eigen::Index i = 0; i < count; ++i) out << "," << base << i + 1;
  };
  out << "t";
  header("x", nx);
  header("u", nu);
  header("y", ny);
  out << ",solve_time_s,status\n";
  for (int k = 0; k < traj.size(); ++k) {
    out << format_double(traj.t[k]);
    for (Eigen::Index i = 0; i < nx; ++i) out << "," << format_double(traj.x[k][i]);
    for (Eigen::Index i = 0; i < nu; ++i) {
      out << "," << (std::isfinite(traj.u[k][i]) ? format_double(traj.u[k][i]) : "nan");
    }
    for (Eigen::Index i = 0; i < ny; ++i) out << "," << format_double(traj.y[k][i]);
    out << "," << format_double(traj.solve_time[k]) << "," << to_string(traj.status[k]) << "\n";
  }
  return out.str();
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  write_text_file(path, trajectory_to_csv(traj));
}

}  // namespace nnmpc

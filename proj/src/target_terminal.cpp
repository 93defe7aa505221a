#include "nnmpc/target_terminal.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nnmpc/nelder_mead.hpp"

namespace nnmpc {

std::string_view to_string(TargetStatus status) {
  switch (status) {
    case TargetStatus::kOptimal: return "optimal";
    case TargetStatus::kInfeasible: return "infeasible";
    case TargetStatus::kWarning: return "warning";
    case TargetStatus::kUnresolved: return "unresolved";
  }
  return "unknown";
}

std::string_view to_string(InputRows mode) {
  switch (mode) {
    case InputRows::kAuto: return "auto";
    case InputRows::kAlways: return "always";
    case InputRows::kNever: return "never";
  }
  return "unknown";
}

namespace {

void check_target_inputs(const SystemMatrices& sys, const ReluNetwork& net,
                         const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                         const ConstraintBoxes& boxes) {
  sys.validate();
  boxes.state.validate("state box");
  boxes.input.validate("input box");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (net.input_dim() != n + m || net.output_dim() != sys.nonlinearity_dim() ||
      boxes.state.dim() != n || boxes.input.dim() != m || y_ref.size() != sys.output_dim() ||
      R_s.rows() != m || R_s.cols() != m) {
    throw std::invalid_argument("steady-state target: dimension mismatch");
  }
}

Eigen::VectorXd stack(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return z;
}

Eigen::VectorXd equality_residual(const SystemMatrices& sys, const ReluNetwork& net,
                                  const Eigen::VectorXd& y_ref, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) {
  const int n = sys.state_dim();
  Eigen::VectorXd r(n + sys.output_dim());
  r.head(n) = x - sys.A * x - sys.B * u - sys.D * net.forward(stack(x, u));
  r.tail(sys.output_dim()) = sys.C * x - y_ref;
  return r;
}

SteadyTarget finish_target(const SystemMatrices& sys, const ReluNetwork& net,
                           const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                           Eigen::VectorXd x, Eigen::VectorXd u) {
  SteadyTarget t;
  t.f = net.forward(stack(x, u));
  t.residual = steady_state_residual(sys, net, y_ref, x, u);
  t.cost = u.dot(R_s * u);
  t.x = std::move(x);
  t.u = std::move(u);
  return t;
}

}  // namespace

double steady_state_residual(const SystemMatrices& sys, const ReluNetwork& net,
                             const Eigen::VectorXd& y_ref, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) {
  return equality_residual(sys, net, y_ref, x, u).lpNorm<Eigen::Infinity>();
}

namespace {

struct TargetModel {
  ModelBuilder builder;
  int xv = 0;
  int uv = 0;
};

// Variables (x, u), the network copy on (x, u) and the steady-state
// equalities; no cost.
TargetModel target_model(const SystemMatrices& sys, const ReluNetwork& net,
                         const Eigen::VectorXd& y_ref, const LayerBounds& bounds,
                         ReluModel model) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int s = sys.nonlinearity_dim();
  TargetModel t;
  ModelBuilder& b = t.builder;
  t.xv = b.add_variables(n);
  t.uv = b.add_variables(m);
  std::vector<int> inputs;
  for (int i = 0; i < n + m; ++i) {
    inputs.push_back(t.xv + i);
    b.add_bounds(t.xv + i, bounds.input_lower[i], bounds.input_upper[i]);
  }
  const EncodingPlan plan = prune_stable(full_plan(net), classify_neurons(bounds));
  const auto enc = encode_network(b, net, bounds, plan, model, inputs);
  const Eigen::MatrixXd I_A = Eigen::MatrixXd::Identity(n, n) - sys.A;
  for (int r = 0; r < n; ++r) {
    ModelBuilder::Terms terms;
    for (int c = 0; c < n; ++c) terms.emplace_back(t.xv + c, I_A(r, c));
    for (int c = 0; c < m; ++c) terms.emplace_back(t.uv + c, -sys.B(r, c));
    for (int c = 0; c < s; ++c) terms.emplace_back(enc.output + c, -sys.D(r, c));
    b.add_equality(terms, 0.0);
  }
  for (int r = 0; r < sys.output_dim(); ++r) {
    ModelBuilder::Terms terms;
    for (int c = 0; c < n; ++c) terms.emplace_back(t.xv + c, sys.C(r, c));
    b.add_equality(terms, y_ref[r]);
  }
  return t;
}

// Shrinks the input box to the range of each input over the triangle
// relaxation of the steady-state equalities. Every exact steady state lies in
// the result; nullopt when the relaxation is already infeasible.
std::optional<LayerBounds> tighten_target_box(const SystemMatrices& sys, const ReluNetwork& net,
                                              const Eigen::VectorXd& y_ref, LayerBounds bounds) {
  constexpr int kRounds = 20;
  const int d = static_cast<int>(bounds.input_lower.size());
  for (int round = 0; round < kRounds; ++round) {
    const TargetModel t = target_model(sys, net, y_ref, bounds, ReluModel::kTriangle);
    const QpProblem base = t.builder.build_qp();
    const int nv = base.num_variables();
    const SparseMatrix zero(nv, nv);
    Eigen::VectorXd lo = bounds.input_lower;
    Eigen::VectorXd hi = bounds.input_upper;
    for (int i = 0; i < d; ++i) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
        q[t.xv + i] = sign;
        const auto sol = solve_qp(QpProblem(zero, q, 0.0, base.A(), base.l(), base.u()));
        if (sol.status == QpStatus::kInfeasible) return std::nullopt;
        if (sol.status != QpStatus::kOptimal) continue;
        const double v = sol.x[t.xv + i];
        const double margin = 1e-7 * (1.0 + std::abs(v));
        if (sign > 0) {
          lo[i] = std::max(lo[i], v - margin);
        } else {
          hi[i] = std::min(hi[i], v + margin);
        }
      }
      if (lo[i] > hi[i]) lo[i] = hi[i] = 0.5 * (lo[i] + hi[i]);
    }
    const Eigen::VectorXd old_width = bounds.input_upper - bounds.input_lower;
    const double shrink =
        ((old_width - (hi - lo)).array() / (old_width.array() + 1e-12)).maxCoeff();
    bounds = propagate_bounds(net, lo, hi);
    // Stops once no input interval shrinks by more than 1%.
    if (shrink <= 1e-2) break;
  }
  return bounds;
}

}  // namespace

SteadyTarget steady_state_exact(const SystemMatrices& sys, const ReluNetwork& net,
                                const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                                const ConstraintBoxes& boxes, const MiqpSettings& settings) {
  check_target_inputs(sys, net, y_ref, R_s, boxes);
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const Box in_box = boxes.network_input();
  const auto bounds =
      tighten_target_box(sys, net, y_ref, propagate_bounds(net, in_box.lower, in_box.upper));
  if (!bounds) {
    SteadyTarget t;
    t.status = TargetStatus::kInfeasible;
    return t;
  }
  TargetModel model = target_model(sys, net, y_ref, *bounds, ReluModel::kExact);
  model.builder.add_weighted_square(model.uv, R_s, Eigen::VectorXd::Zero(m));

  const auto sol = solve_miqp(model.builder.build_miqp(), settings);
  if (sol.x.size() == 0) {
    SteadyTarget t;
    // Without an incumbent only a completed search proves infeasibility.
    t.status = sol.status == MiqpStatus::kInfeasible ? TargetStatus::kInfeasible
                                                     : TargetStatus::kUnresolved;
    t.nodes = sol.nodes;
    return t;
  }
  SteadyTarget t = finish_target(sys, net, y_ref, R_s, sol.x.segment(model.xv, n),
                                 sol.x.segment(model.uv, m));
  t.nodes = sol.nodes;
  t.status = sol.status == MiqpStatus::kOptimal && t.residual <= 1e-6 ? TargetStatus::kOptimal
                                                                      : TargetStatus::kWarning;
  return t;
}

SteadyTarget steady_state_search(const SystemMatrices& sys, const ReluNetwork& net,
                                 const Eigen::VectorXd& y_ref, const Eigen::MatrixXd& R_s,
                                 const ConstraintBoxes& boxes, const SearchSettings& settings) {
  check_target_inputs(sys, net, y_ref, R_s, boxes);
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const Box in_box = boxes.network_input();
  auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd x = v.head(n);
    const Eigen::VectorXd u = v.tail(m);
    const double cost = u.dot(R_s * u);
    if (settings.penalty_weight == 0.0) return cost;
    return cost + settings.penalty_weight * equality_residual(sys, net, y_ref, x, u).squaredNorm();
  };
  NelderMeadOptions opt;
  opt.seed = settings.seed;
  opt.max_evals = settings.max_evals;
  const Eigen::VectorXd start = 0.5 * (in_box.lower + in_box.upper);
  const auto res = nelder_mead_bounded(objective, in_box.lower, in_box.upper, start, opt);
  SteadyTarget t = finish_target(sys, net, y_ref, R_s, res.x.head(n), res.x.tail(m));
  t.evaluations = res.evaluations;
  t.status = t.residual <= 1e-4 ? TargetStatus::kOptimal : TargetStatus::kWarning;
  return t;
}

Box disturbance_box(const LayerBounds& bounds, const Eigen::VectorXd& f_star) {
  if (f_star.size() != bounds.output_lower.size()) {
    throw std::invalid_argument("disturbance_box: dimension mismatch");
  }
  if ((f_star.array() < bounds.output_lower.array()).any() ||
      (f_star.array() > bounds.output_upper.array()).any()) {
    throw std::invalid_argument("disturbance_box: f* lies outside the network output bounds");
  }
  return {bounds.output_lower - f_star, bounds.output_upper - f_star};
}

Box relaxed_output_bounds(const ReluNetwork& net, const LayerBounds& bounds) {
  ModelBuilder b;
  const int in = b.add_variables(net.input_dim());
  std::vector<int> inputs;
  for (int i = 0; i < net.input_dim(); ++i) {
    inputs.push_back(in + i);
    b.add_bounds(in + i, bounds.input_lower[i], bounds.input_upper[i]);
  }
  const EncodingPlan plan = prune_stable(full_plan(net), classify_neurons(bounds));
  const auto enc = encode_network(b, net, bounds, plan, ReluModel::kTriangle, inputs);
  Box out{bounds.output_lower, bounds.output_upper};
  for (int j = 0; j < net.output_dim(); ++j) {
    for (double sign : {1.0, -1.0}) {
      ModelBuilder lp = b;
      lp.add_linear(enc.output + j, sign);
      const auto sol = solve_qp(lp.build_qp());
      if (sol.status != QpStatus::kOptimal) continue;
      // Back off by the solver tolerance so the bound stays sound.
      const double margin = 1e-7 * (1.0 + std::abs(sol.objective));
      if (sign > 0) {
        out.lower[j] = std::max(out.lower[j], sol.objective - margin);
      } else {
        out.upper[j] = std::min(out.upper[j], -sol.objective + margin);
      }
    }
  }
  return out;
}

namespace {

double box_support(const Eigen::RowVectorXd& row, const Box& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    s += std::max(row[i] * w.lower[i], row[i] * w.upper[i]);
  }
  return s;
}

RpiResult maximal_rpi(const Eigen::MatrixXd& A_s, const Eigen::MatrixXd& H0,
                      const Eigen::VectorXd& h0, const Box& w_box, bool input_rows,
                      const RpiSettings& settings) {
  const int n = static_cast<int>(A_s.rows());
  Polytope omega(H0, h0);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd offset = h0;
  for (int t = 1; t <= settings.max_iter; ++t) {
    const Eigen::MatrixXd prev_rows = H0 * power;
    for (Eigen::Index r = 0; r < H0.rows(); ++r) offset[r] -= box_support(prev_rows.row(r), w_box);
    power = A_s * power;
    const Eigen::MatrixXd rows = H0 * power;
    if ((offset.array() < 0.0).any()) {
      throw std::runtime_error("compute_rpi: the invariant set is empty after " +
                               std::to_string(t) + " steps (disturbance too large)");
    }
    std::vector<Eigen::Index> added;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      if (rows.row(r).lpNorm<Eigen::Infinity>() <= settings.eps) continue;
      const auto peak = maximize_linear(omega, rows.row(r).transpose());
      const double tol = settings.eps * std::max(1.0, std::abs(offset[r]));
      if (peak && *peak <= offset[r] + tol) continue;
      added.push_back(r);
    }
    if (added.empty()) {
      RpiResult res;
      res.set = remove_redundant(omega);
      res.iterations = t;
      res.input_rows = input_rows;
      return res;
    }
    Eigen::MatrixXd H(added.size(), n);
    Eigen::VectorXd h(added.size());
    for (std::size_t k = 0; k < added.size(); ++k) {
      H.row(k) = rows.row(added[k]);
      h[k] = offset[added[k]];
    }
    omega = omega.intersect(Polytope(std::move(H), std::move(h)));
  }
  throw std::runtime_error("compute_rpi: no convergence within the iteration limit");
}

}  // namespace

RpiResult compute_rpi(const Eigen::MatrixXd& A_s, const Eigen::MatrixXd& K,
                      const ConstraintBoxes& boxes, const Eigen::VectorXd& x_star,
                      const Eigen::VectorXd& u_star, const Box& w_box,
                      const RpiSettings& settings) {
  const int n = static_cast<int>(A_s.rows());
  const int m = static_cast<int>(K.rows());
  boxes.state.validate("state box");
  boxes.input.validate("input box");
  w_box.validate("disturbance box");
  if (A_s.cols() != n || K.cols() != n || boxes.state.dim() != n || boxes.input.dim() != m ||
      x_star.size() != n || u_star.size() != m || w_box.dim() != n) {
    throw std::invalid_argument("compute_rpi: dimension mismatch");
  }
  if (!boxes.state.contains(x_star) || !boxes.input.contains(u_star)) {
    throw std::invalid_argument("compute_rpi: target outside the constraint boxes");
  }
  if ((w_box.lower.array() > 0.0).any() || (w_box.upper.array() < 0.0).any()) {
    throw std::invalid_argument("compute_rpi: disturbance box must contain 0");
  }

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> offsets;
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd e = Eigen::RowVectorXd::Unit(n, i);
    rows.push_back(e);
    offsets.push_back(boxes.state.upper[i] - x_star[i]);
    rows.push_back(-e);
    offsets.push_back(x_star[i] - boxes.state.lower[i]);
  }
  const auto state_rows = static_cast<Eigen::Index>(rows.size());
  for (int i = 0; i < m; ++i) {
    if (K.row(i).isZero(0.0)) continue;
    rows.push_back(K.row(i));
    offsets.push_back(boxes.input.upper[i] - u_star[i]);
    rows.push_back(-K.row(i));
    offsets.push_back(u_star[i] - boxes.input.lower[i]);
  }
  Eigen::MatrixXd H0(rows.size(), n);
  Eigen::VectorXd h0(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    H0.row(r) = rows[r];
    h0[r] = offsets[r];
  }
  const bool has_input_rows = H0.rows() > state_rows;

  if (settings.input_rows == InputRows::kNever || !has_input_rows) {
    return maximal_rpi(A_s, H0.topRows(state_rows), h0.head(state_rows), w_box, false, settings);
  }
  try {
    return maximal_rpi(A_s, H0, h0, w_box, true, settings);
  } catch (const std::runtime_error& e) {
    if (settings.input_rows == InputRows::kAlways) throw;
    RpiResult res =
        maximal_rpi(A_s, H0.topRows(state_rows), h0.head(state_rows), w_box, false, settings);
    res.note = std::string("input rows dropped: ") + e.what();
    return res;
  }
}

Polytope terminal_set(const Polytope& rpi, const Eigen::VectorXd& x_star) {
  return rpi.translated(x_star);
}

}  // namespace nnmpc

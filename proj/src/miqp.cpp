#include "nnmpc/miqp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace nnmpc {

std::string_view to_string(MiqpStatus status) {
  switch (status) {
    case MiqpStatus::kOptimal: return "optimal";
    case MiqpStatus::kInfeasible: return "infeasible";
    case MiqpStatus::kNodeLimit: return "node_limit";
  }
  return "unknown";
}

MiqpProblem::MiqpProblem(QpProblem base, std::vector<int> binary_indices)
    : base_(std::move(base)), binaries_(std::move(binary_indices)) {
  std::sort(binaries_.begin(), binaries_.end());
  if (std::adjacent_find(binaries_.begin(), binaries_.end()) != binaries_.end()) {
    throw std::invalid_argument("MiqpProblem: duplicate binary index");
  }
  const int n = base_.num_variables();
  const SparseMatrix At = base_.A().transpose();
  std::vector<int> unit_row(n, -1);
  for (int r = 0; r < At.outerSize(); ++r) {
    int nnz = 0;
    int col = -1;
    double val = 0.0;
    for (SparseMatrix::InnerIterator it(At, r); it; ++it) {
      ++nnz;
      col = static_cast<int>(it.index());
      val = it.value();
    }
    if (nnz == 1 && val == 1.0 && base_.l()[r] == 0.0 && base_.u()[r] == 1.0 &&
        unit_row[col] < 0) {
      unit_row[col] = r;
    }
  }
  for (int j : binaries_) {
    if (j < 0 || j >= n) throw std::invalid_argument("MiqpProblem: binary index out of range");
    if (unit_row[j] < 0) {
      throw std::invalid_argument("MiqpProblem: binary " + std::to_string(j) +
                                  " lacks a 0 <= x <= 1 row");
    }
    bound_rows_.push_back(unit_row[j]);
  }
}

QpProblem MiqpProblem::restricted(const std::vector<int>& values) const {
  Eigen::VectorXd l = base_.l();
  Eigen::VectorXd u = base_.u();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] < 0) continue;
    l[bound_rows_[k]] = u[bound_rows_[k]] = values[k];
  }
  return base_.with_row_bounds(std::move(l), std::move(u));
}

namespace {

struct Node {
  double bound;
  long seq;
  std::vector<int> fixed;  // -1 free, else 0/1
  Eigen::VectorXd x;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

double relative_gap(double incumbent, double bound) {
  return (incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

MiqpSolution solve_miqp(const MiqpProblem& problem, const MiqpSettings& settings) {
  const int k = problem.num_binaries();
  const auto& bins = problem.binary_indices();
  MiqpSolution result;

  // Fix every binary to its rounded value and re-solve; returns true if this
  // improved the incumbent.
  auto try_incumbent = [&](const Eigen::VectorXd& x) {
    std::vector<int> values(k);
    for (int b = 0; b < k; ++b) values[b] = x[bins[b]] >= 0.5 ? 1 : 0;
    const auto sol = solve_qp(problem.restricted(values), settings.qp);
    ++result.nodes;
    if (sol.status != QpStatus::kOptimal || sol.objective >= result.objective) return false;
    result.objective = sol.objective;
    result.x = sol.x;
    for (int b = 0; b < k; ++b) result.x[bins[b]] = values[b];
    result.incumbent_history.push_back(sol.objective);
    return true;
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  {
    const auto root = solve_qp(problem.base(), settings.qp);
    ++result.nodes;
    if (root.status == QpStatus::kInfeasible) return result;
    if (root.status != QpStatus::kOptimal) {
      ++result.failed_relaxations;
      return result;
    }
    result.root_bound = root.objective;
    open.push(Node{root.objective, seq++, std::vector<int>(k, -1), root.x});
    if (k > 0) try_incumbent(root.x);
  }

  int processed = 0;
  bool hit_limit = false;
  while (!open.empty()) {
    Node node = open.top();
    result.best_bound = node.bound;
    if (std::isfinite(result.objective) &&
        relative_gap(result.objective, node.bound) <= settings.gap_tol) {
      break;
    }
    open.pop();

    int branch = -1;
    double most = settings.integrality_tol;
    for (int b = 0; b < k; ++b) {
      if (node.fixed[b] >= 0) continue;
      const double v = node.x[bins[b]];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > most) {
        most = frac;
        branch = b;
      }
    }
    if (branch < 0) {
      try_incumbent(node.x);
      continue;
    }
    if (++processed % settings.heuristic_period == 0) try_incumbent(node.x);

    if (result.nodes >= settings.node_limit) {
      hit_limit = true;
      open.push(std::move(node));
      break;
    }
    for (int value : {0, 1}) {
      std::vector<int> fixed = node.fixed;
      fixed[branch] = value;
      const auto sol = solve_qp(problem.restricted(fixed), settings.qp);
      ++result.nodes;
      if (sol.status == QpStatus::kInfeasible) continue;
      if (sol.status != QpStatus::kOptimal) {
        // Unresolved child: keep it under the parent's bound so deeper
        // fixings can still settle it.
        ++result.failed_relaxations;
        Eigen::VectorXd guess = node.x;
        guess[bins[branch]] = value;
        open.push(Node{node.bound, seq++, std::move(fixed), std::move(guess)});
        continue;
      }
      // A child cannot be better than its parent.
      const double bound = std::max(sol.objective, node.bound);
      if (std::isfinite(result.objective) &&
          relative_gap(result.objective, bound) <= settings.gap_tol) {
        continue;
      }
      open.push(Node{bound, seq++, std::move(fixed), sol.x});
    }
  }

  if (open.empty()) {
    result.best_bound = std::isfinite(result.objective) ? result.objective : kInf;
  } else {
    result.best_bound = std::min(result.best_bound, open.top().bound);
  }
  if (!std::isfinite(result.objective)) {
    result.status = hit_limit ? MiqpStatus::kNodeLimit : MiqpStatus::kInfeasible;
    return result;
  }
  result.best_bound = std::min(result.best_bound, result.objective);
  result.gap = relative_gap(result.objective, result.best_bound);
  result.status = hit_limit && result.gap > settings.gap_tol ? MiqpStatus::kNodeLimit
                                                             : MiqpStatus::kOptimal;
  return result;
}

MiqpSolution enumerate_binaries(const MiqpProblem& problem, const QpSettings& qp) {
  const int k = problem.num_binaries();
  if (k > 20) {
    throw std::invalid_argument("enumerate_binaries: more than 20 binaries");
  }
  MiqpSolution result;
  const long count = 1L << k;
  for (long mask = 0; mask < count; ++mask) {
    std::vector<int> values(k);
    for (int b = 0; b < k; ++b) values[b] = static_cast<int>((mask >> b) & 1);
    const auto sol = solve_qp(problem.restricted(values), qp);
    ++result.nodes;
    if (sol.status != QpStatus::kOptimal) {
      if (sol.status != QpStatus::kInfeasible) ++result.failed_relaxations;
      continue;
    }
    if (sol.objective < result.objective) {
      result.objective = sol.objective;
      result.x = sol.x;
      for (int b = 0; b < k; ++b) result.x[problem.binary_indices()[b]] = values[b];
      result.incumbent_history.push_back(sol.objective);
    }
  }
  if (std::isfinite(result.objective)) {
    result.status = MiqpStatus::kOptimal;
    result.best_bound = result.objective;
    result.gap = 0.0;
  }
  return result;
}

}  // namespace nnmpc

#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace nnmpc {

struct NelderMeadOptions {
  double tol_x = 1e-10;
  double tol_f = 1e-14;
  int max_evals = 20000;
  // Extra runs restarted from the incumbent with a fresh, randomly scaled
  // simplex.
  int restarts = 6;
  std::uint64_t seed = 0;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Unconstrained Nelder–Mead (reflection 1, expansion 2, contraction ½,
/// shrink ½; MATLAB-style initial simplex and stopping test).
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options);

/// Box-constrained search through the sinusoidal change of variables
/// x = lb + (ub − lb)(sin z + 1)/2. Deterministic for a fixed seed.
NelderMeadResult nelder_mead_bounded(const Objective& f, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                                     const NelderMeadOptions& options = {});

}  // namespace nnmpc

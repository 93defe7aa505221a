#include "nnmpc/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace nnmpc {
namespace {

NelderMeadResult run_simplex(const Objective& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const NelderMeadOptions& opt,
                             int eval_budget) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  vals[0] = eval(x0);
  for (int i = 0; i < n; ++i) {
    pts[i + 1][i] += step[i];
    vals[i + 1] = eval(pts[i + 1]);
  }
  std::vector<int> order(n + 1);
  bool converged = false;
  while (evals < eval_budget) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    {
      std::vector<Eigen::VectorXd> p2;
      std::vector<double> v2;
      for (int k : order) {
        p2.push_back(pts[k]);
        v2.push_back(vals[k]);
      }
      pts.swap(p2);
      vals.swap(v2);
    }
    double dx = 0.0;
    double df = 0.0;
    for (int i = 1; i <= n; ++i) {
      dx = std::max(dx, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
      df = std::max(df, std::abs(vals[i] - vals[0]));
    }
    if (dx <= opt.tol_x && df <= opt.tol_f) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;
    const Eigen::VectorXd xr = 2.0 * centroid - pts[n];
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const Eigen::VectorXd xe = 3.0 * centroid - 2.0 * pts[n];
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
      continue;
    }
    if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
      continue;
    }
    bool shrink = false;
    if (fr < vals[n]) {
      const Eigen::VectorXd xc = 1.5 * centroid - 0.5 * pts[n];
      const double fc = eval(xc);
      if (fc <= fr) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      const Eigen::VectorXd xcc = 0.5 * centroid + 0.5 * pts[n];
      const double fcc = eval(xcc);
      if (fcc < vals[n]) {
        pts[n] = xcc;
        vals[n] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (int i = 1; i <= n; ++i) {
        pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
        vals[i] = eval(pts[i]);
      }
    }
  }
  const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  return {pts[best], vals[best], evals, converged};
}

Eigen::VectorXd default_step(const Eigen::VectorXd& x0) {
  Eigen::VectorXd step(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    step[i] = x0[i] != 0.0 ? 0.05 * x0[i] : 0.00025;
  }
  return step;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
  if (x0.size() == 0) throw std::invalid_argument("nelder_mead: empty start point");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  NelderMeadResult best = run_simplex(f, x0, default_step(x0), options, options.max_evals);
  int total = best.evaluations;
  for (int r = 0; r < options.restarts && total < options.max_evals; ++r) {
    Eigen::VectorXd step(x0.size());
    for (Eigen::Index i = 0; i < step.size(); ++i) {
      const double base = std::max(std::abs(best.x[i]), 1.0);
      step[i] = 0.05 * base * scale(rng) * (r % 2 ? -1.0 : 1.0);
    }
    auto next = run_simplex(f, best.x, step, options, options.max_evals - total);
    total += next.evaluations;
    const bool improved = next.value < best.value;
    if (improved) {
      best.x = next.x;
      best.value = next.value;
    }
    best.converged = next.converged;
    if (!improved && next.converged) break;
  }
  best.evaluations = total;
  return best;
}

NelderMeadResult nelder_mead_bounded(const Objective& f, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                                     const NelderMeadOptions& options) {
  const auto n = x0.size();
  if (lower.size() != n || upper.size() != n || !lower.allFinite() || !upper.allFinite() ||
      (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("nelder_mead_bounded: invalid bounds");
  }
  auto to_box = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = lower[i] + (upper[i] - lower[i]) * (std::sin(z[i]) + 1.0) / 2.0;
      x[i] = std::clamp(x[i], lower[i], upper[i]);
    }
    return x;
  };
  Eigen::VectorXd z0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double width = upper[i] - lower[i];
    const double t = width > 0.0 ? 2.0 * (x0[i] - lower[i]) / width - 1.0 : 0.0;
    z0[i] = 2.0 * M_PI + std::asin(std::clamp(t, -1.0, 1.0));
  }
  auto result = nelder_mead([&](const Eigen::VectorXd& z) { return f(to_box(z)); }, z0, options);
  result.x = to_box(result.x);
  return result;
}

}  // namespace nnmpc

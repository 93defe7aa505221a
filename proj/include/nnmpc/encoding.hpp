#pragma once

#include <utility>
#include <vector>

#include "nnmpc/miqp.hpp"
#include "nnmpc/qp.hpp"
#include "nnmpc/relu_network.hpp"

namespace nnmpc {

/// Incremental assembly of a QP / MIQP in the `l ≤ A x ≤ u` form.
class ModelBuilder {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  /// Appends `count` free variables and returns the index of the first.
  int add_variables(int count);
  int num_variables() const { return num_vars_; }
  int num_rows() const { return static_cast<int>(lower_.size()); }

  /// Zero coefficients are dropped; returns the row index.
  int add_row(const Terms& terms, double lower, double upper);
  int add_equality(const Terms& terms, double rhs) { return add_row(terms, rhs, rhs); }
  void add_bounds(int var, double lower, double upper) { add_row({{var, 1.0}}, lower, upper); }
  void fix(int var, double value) { add_bounds(var, value, value); }

  /// Adds a [0, 1] row and marks the variable binary.
  void add_binary(int var);
  const std::vector<int>& binaries() const { return binaries_; }

  /// Adds coeff · x[var] to the objective.
  void add_linear(int var, double coeff);

  /// Adds (v − target)ᵀ W (v − target) for v = x[first .. first + size).
  void add_weighted_square(int first, const Eigen::MatrixXd& weight,
                           const Eigen::VectorXd& target);

  QpProblem build_qp() const;
  MiqpProblem build_miqp() const;

 private:
  int num_vars_ = 0;
  std::vector<Eigen::Triplet<double>> a_;
  std::vector<Eigen::Triplet<double>> p_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> q_;
  double c0_ = 0.0;
  std::vector<int> binaries_;
};

/// How a hidden neuron is represented in an optimization model.
enum class NeuronEncoding {
  kZero,   // z = 0
  kPass,   // z = ẑ
  kSplit,  // binary indicator (exact) or triangle relaxation
};

using EncodingPlan = std::vector<std::vector<NeuronEncoding>>;

/// Every neuron split.
EncodingPlan full_plan(const ReluNetwork& net);

/// Replaces split neurons that are provably inactive with kZero and provably
/// active ones with kPass.
EncodingPlan prune_stable(EncodingPlan plan, const NeuronStatusMap& status);

int count_split(const EncodingPlan& plan);

enum class ReluModel { kExact, kTriangle };

/// Variable layout of one encoded network copy.
struct EncodedNetwork {
  std::vector<int> pre;      // first index of ẑ_i per hidden layer
  std::vector<int> post;     // first index of z_i per hidden layer
  std::vector<std::vector<int>> indicator;  // δ index per neuron, -1 if none
  int output = -1;           // first index of f
};

/// Slope of the upper triangle edge, 0 when the interval is degenerate.
double triangle_slope(double pre_lower, double pre_upper);

/// Adds ẑ, z (and δ for exact split neurons) and f for the network evaluated
/// at `inputs`, plus the output bound rows f̲ ≤ f ≤ f̄.
EncodedNetwork encode_network(ModelBuilder& builder, const ReluNetwork& net,
                              const LayerBounds& bounds, const EncodingPlan& plan,
                              ReluModel model, const std::vector<int>& inputs);

}  // namespace nnmpc

#include "nnmpc/encoding.hpp"

#include <algorithm>
#include <stdexcept>

namespace nnmpc {

int ModelBuilder::add_variables(int count) {
  if (count < 0) throw std::invalid_argument("add_variables: negative count");
  const int first = num_vars_;
  num_vars_ += count;
  q_.resize(num_vars_, 0.0);
  return first;
}

int ModelBuilder::add_row(const Terms& terms, double lower, double upper) {
  const int row = num_rows();
  for (const auto& [var, coeff] : terms) {
    if (var < 0 || var >= num_vars_) throw std::out_of_range("add_row: bad variable");
    if (coeff != 0.0) a_.emplace_back(row, var, coeff);
  }
  lower_.push_back(lower);
  upper_.push_back(upper);
  return row;
}

void ModelBuilder::add_binary(int var) {
  add_bounds(var, 0.0, 1.0);
  binaries_.push_back(var);
}

void ModelBuilder::add_linear(int var, double coeff) {
  if (var < 0 || var >= num_vars_) throw std::out_of_range("add_linear: bad variable");
  q_[var] += coeff;
}

void ModelBuilder::add_weighted_square(int first, const Eigen::MatrixXd& weight,
                                       const Eigen::VectorXd& target) {
  const int k = static_cast<int>(target.size());
  if (weight.rows() != k || weight.cols() != k || first < 0 || first + k > num_vars_) {
    throw std::invalid_argument("add_weighted_square: shape mismatch");
  }
  const Eigen::MatrixXd sym = 0.5 * (weight + weight.transpose());
  const Eigen::VectorXd lin = sym * target;
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      if (sym(r, c) != 0.0) p_.emplace_back(first + r, first + c, 2.0 * sym(r, c));
    }
    q_[first + r] -= 2.0 * lin[r];
  }
  c0_ += target.dot(lin);
}

QpProblem ModelBuilder::build_qp() const {
  SparseMatrix P(num_vars_, num_vars_);
  P.setFromTriplets(p_.begin(), p_.end());
  SparseMatrix A(num_rows(), num_vars_);
  A.setFromTriplets(a_.begin(), a_.end());
  return QpProblem(std::move(P), Eigen::Map<const Eigen::VectorXd>(q_.data(), num_vars_),
                   c0_, std::move(A),
                   Eigen::Map<const Eigen::VectorXd>(lower_.data(), num_rows()),
                   Eigen::Map<const Eigen::VectorXd>(upper_.data(), num_rows()));
}

MiqpProblem ModelBuilder::build_miqp() const { return MiqpProblem(build_qp(), binaries_); }

EncodingPlan full_plan(const ReluNetwork& net) {
  EncodingPlan plan;
  for (int i = 0; i < net.hidden_layer_count(); ++i) {
    plan.emplace_back(net.layer(i).weight.rows(), NeuronEncoding::kSplit);
  }
  return plan;
}

EncodingPlan prune_stable(EncodingPlan plan, const NeuronStatusMap& status) {
  if (plan.size() != status.size()) throw std::invalid_argument("prune_stable: layer mismatch");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].size() != status[i].size()) {
      throw std::invalid_argument("prune_stable: neuron count mismatch");
    }
    for (std::size_t j = 0; j < plan[i].size(); ++j) {
      if (plan[i][j] != NeuronEncoding::kSplit) continue;
      if (status[i][j] == NeuronStatus::kStrictlyInactive) plan[i][j] = NeuronEncoding::kZero;
      if (status[i][j] == NeuronStatus::kStrictlyActive) plan[i][j] = NeuronEncoding::kPass;
    }
  }
  return plan;
}

int count_split(const EncodingPlan& plan) {
  int n = 0;
  for (const auto& layer : plan) {
    n += static_cast<int>(std::count(layer.begin(), layer.end(), NeuronEncoding::kSplit));
  }
  return n;
}

double triangle_slope(double pre_lower, double pre_upper) {
  if (pre_lower == pre_upper) return 0.0;
  return (std::max(pre_upper, 0.0) - std::max(pre_lower, 0.0)) / (pre_upper - pre_lower);
}

EncodedNetwork encode_network(ModelBuilder& builder, const ReluNetwork& net,
                              const LayerBounds& bounds, const EncodingPlan& plan,
                              ReluModel model, const std::vector<int>& inputs) {
  if (static_cast<int>(inputs.size()) != net.input_dim()) {
    throw std::invalid_argument("encode_network: input variable count mismatch");
  }
  if (static_cast<int>(plan.size()) != net.hidden_layer_count() ||
      static_cast<int>(bounds.pre_lower.size()) != net.hidden_layer_count()) {
    throw std::invalid_argument("encode_network: plan/bounds do not match the network");
  }
  EncodedNetwork enc;
  std::vector<int> prev = inputs;
  for (int i = 0; i < net.depth(); ++i) {
    const auto& layer = net.layer(i);
    const int rows = static_cast<int>(layer.weight.rows());
    const int first = builder.add_variables(rows);
    // ẑ − W z_prev = b
    for (int r = 0; r < rows; ++r) {
      ModelBuilder::Terms terms{{first + r, 1.0}};
      for (int c = 0; c < layer.weight.cols(); ++c) {
        terms.emplace_back(prev[c], -layer.weight(r, c));
      }
      builder.add_equality(terms, layer.bias[r]);
    }
    if (i + 1 == net.depth()) {
      enc.output = first;
      for (int r = 0; r < rows; ++r) {
        builder.add_bounds(first + r, bounds.output_lower[r], bounds.output_upper[r]);
      }
      break;
    }
    if (static_cast<int>(plan[i].size()) != rows) {
      throw std::invalid_argument("encode_network: plan width mismatch");
    }
    const int post = builder.add_variables(rows);
    enc.pre.push_back(first);
    enc.post.push_back(post);
    enc.indicator.emplace_back(rows, -1);
    for (int j = 0; j < rows; ++j) {
      const int zhat = first + j;
      const int z = post + j;
      const double lo = bounds.pre_lower[i][j];
      const double hi = bounds.pre_upper[i][j];
      switch (plan[i][j]) {
        case NeuronEncoding::kZero:
          builder.fix(z, 0.0);
          break;
        case NeuronEncoding::kPass:
          builder.add_equality({{z, 1.0}, {zhat, -1.0}}, 0.0);
          break;
        case NeuronEncoding::kSplit: {
          builder.add_bounds(z, 0.0, kInf);
          builder.add_row({{z, 1.0}, {zhat, -1.0}}, 0.0, kInf);
          if (model == ReluModel::kExact) {
            const int delta = builder.add_variables(1);
            builder.add_binary(delta);
            enc.indicator[i][j] = delta;
            // z ≤ ẑ − l̂(1 − δ)  and  z ≤ û δ
            builder.add_row({{z, 1.0}, {zhat, -1.0}, {delta, -lo}}, -kInf, -lo);
            builder.add_row({{z, 1.0}, {delta, -hi}}, -kInf, 0.0);
          } else {
            // z ≤ a (ẑ − l̂) + φ(l̂)
            const double a = triangle_slope(lo, hi);
            builder.add_row({{z, 1.0}, {zhat, -a}}, -kInf, std::max(lo, 0.0) - a * lo);
          }
          break;
        }
      }
    }
    prev.resize(rows);
    for (int j = 0; j < rows; ++j) prev[j] = post + j;
  }
  return enc;
}

}  // namespace nnmpc

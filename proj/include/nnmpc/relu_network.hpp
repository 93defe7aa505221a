#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nnmpc {

/// One affine layer `W z + b`.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Feed-forward network with ReLU on every hidden layer and an affine output
/// layer. `layers().size()` is the depth L; the first L-1 layers are hidden.
class ReluNetwork {
 public:
  ReluNetwork() = default;

  /// Throws std::invalid_argument if the layer shapes do not chain or any
  /// weight or bias is non-finite.
  explicit ReluNetwork(std::vector<DenseLayer> layers);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int depth() const { return static_cast<int>(layers_.size()); }
  int hidden_layer_count() const { return depth() - 1; }
  int hidden_neuron_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(int i) const { return layers_.at(i); }

  Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& input) const;

  /// Pre-activations of every hidden layer for one input.
  std::vector<Eigen::VectorXd> hidden_pre_activations(
      const Eigen::Ref<const Eigen::VectorXd>& input) const;

 private:
  std::vector<DenseLayer> layers_;
  int input_dim_ = 0;
  int output_dim_ = 0;
};

/// Interval bounds from interval-arithmetic propagation over an input box.
struct LayerBounds {
  Eigen::VectorXd input_lower;
  Eigen::VectorXd input_upper;
  // Indexed by hidden layer.
  std::vector<Eigen::VectorXd> pre_lower;
  std::vector<Eigen::VectorXd> pre_upper;
  std::vector<Eigen::VectorXd> post_lower;
  std::vector<Eigen::VectorXd> post_upper;
  Eigen::VectorXd output_lower;
  Eigen::VectorXd output_upper;
};

LayerBounds propagate_bounds(const ReluNetwork& net,
                             const Eigen::Ref<const Eigen::VectorXd>& lower,
                             const Eigen::Ref<const Eigen::VectorXd>& upper);

enum class NeuronStatus { kStrictlyInactive, kStrictlyActive, kUnstable };

/// Per hidden layer, per neuron.
using NeuronStatusMap = std::vector<std::vector<NeuronStatus>>;

NeuronStatus classify_neuron(double pre_lower, double pre_upper);
NeuronStatusMap classify_neurons(const LayerBounds& bounds);
int count_status(const NeuronStatusMap& map, NeuronStatus status);

// Network file: JSON with input_dim, output_dim and
// layers: [{rows, cols, W (row-major), b}], numbers printed with 17
// significant digits.
std::string network_to_text(const ReluNetwork& net);
ReluNetwork network_from_text(const std::string& text);
void save_network(const ReluNetwork& net, const std::filesystem::path& path);
ReluNetwork load_network(const std::filesystem::path& path);

}  // namespace nnmpc

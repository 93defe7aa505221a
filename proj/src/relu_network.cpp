#include "nnmpc/relu_network.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nnmpc/text_io.hpp"

namespace nnmpc {

ReluNetwork::ReluNetwork(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw std::invalid_argument("ReluNetwork: at least one layer required");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw std::invalid_argument("ReluNetwork: empty weight matrix");
    }
    if (l.bias.size() != l.weight.rows()) {
      throw std::invalid_argument("ReluNetwork: bias length mismatch in layer " +
                                  std::to_string(i));
    }
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw std::invalid_argument("ReluNetwork: layer " + std::to_string(i) +
                                  " does not chain with its predecessor");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw std::invalid_argument("ReluNetwork: non-finite parameter in layer " +
                                  std::to_string(i));
    }
  }
  input_dim_ = static_cast<int>(layers_.front().weight.cols());
  output_dim_ = static_cast<int>(layers_.back().weight.rows());
}

int ReluNetwork::hidden_neuron_count() const {
  int count = 0;
  for (int i = 0; i + 1 < depth(); ++i) {
    count += static_cast<int>(layers_[i].weight.rows());
  }
  return count;
}

Eigen::VectorXd ReluNetwork::forward(
    const Eigen::Ref<const Eigen::VectorXd>& input) const {
  if (input.size() != input_dim_) {
    throw std::invalid_argument("forward: input has dimension " +
                                std::to_string(input.size()) + ", expected " +
                                std::to_string(input_dim_));
  }
  Eigen::VectorXd z = input;
  for (int i = 0; i + 1 < depth(); ++i) {
    z = (layers_[i].weight * z + layers_[i].bias).cwiseMax(0.0);
  }
  return layers_.back().weight * z + layers_.back().bias;
}

std::vector<Eigen::VectorXd> ReluNetwork::hidden_pre_activations(
    const Eigen::Ref<const Eigen::VectorXd>& input) const {
  if (input.size() != input_dim_) {
    throw std::invalid_argument("hidden_pre_activations: dimension mismatch");
  }
  std::vector<Eigen::VectorXd> pre;
  Eigen::VectorXd z = input;
  for (int i = 0; i + 1 < depth(); ++i) {
    pre.push_back(layers_[i].weight * z + layers_[i].bias);
    z = pre.back().cwiseMax(0.0);
  }
  return pre;
}

LayerBounds propagate_bounds(const ReluNetwork& net,
                             const Eigen::Ref<const Eigen::VectorXd>& lower,
                             const Eigen::Ref<const Eigen::VectorXd>& upper) {
  if (lower.size() != net.input_dim() || upper.size() != net.input_dim()) {
    throw std::invalid_argument("propagate_bounds: box dimension mismatch");
  }
  if (!lower.allFinite() || !upper.allFinite() ||
      (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("propagate_bounds: invalid input box");
  }
  LayerBounds b;
  b.input_lower = lower;
  b.input_upper = upper;

  Eigen::VectorXd lo = lower;
  Eigen::VectorXd hi = upper;
  for (int i = 0; i < net.depth(); ++i) {
    const auto& layer = net.layer(i);
    const Eigen::MatrixXd w_pos = layer.weight.cwiseMax(0.0);
    const Eigen::MatrixXd w_neg = layer.weight.cwiseMin(0.0);
    Eigen::VectorXd pre_lo = w_pos * lo + w_neg * hi + layer.bias;
    Eigen::VectorXd pre_hi = w_neg * lo + w_pos * hi + layer.bias;
    if (i + 1 == net.depth()) {
      b.output_lower = std::move(pre_lo);
      b.output_upper = std::move(pre_hi);
      break;
    }
    lo = pre_lo.cwiseMax(0.0);
    hi = pre_hi.cwiseMax(0.0);
    b.pre_lower.push_back(std::move(pre_lo));
    b.pre_upper.push_back(std::move(pre_hi));
    b.post_lower.push_back(lo);
    b.post_upper.push_back(hi);
  }
  return b;
}

NeuronStatus classify_neuron(double pre_lower, double pre_upper) {
  if (pre_upper <= 0.0) return NeuronStatus::kStrictlyInactive;
  if (pre_lower >= 0.0) return NeuronStatus::kStrictlyActive;
  return NeuronStatus::kUnstable;
}

NeuronStatusMap classify_neurons(const LayerBounds& bounds) {
  NeuronStatusMap map(bounds.pre_lower.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& lo = bounds.pre_lower[i];
    const auto& hi = bounds.pre_upper[i];
    map[i].reserve(lo.size());
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
      map[i].push_back(classify_neuron(lo[j], hi[j]));
    }
  }
  return map;
}

int count_status(const NeuronStatusMap& map, NeuronStatus status) {
  int n = 0;
  for (const auto& layer : map) {
    for (auto s : layer) n += (s == status);
  }
  return n;
}

std::string network_to_text(const ReluNetwork& net) {
  // Written by hand so every number carries 17 significant digits.
  std::ostringstream out;
  out << "{\n  \"input_dim\": " << net.input_dim()
      << ",\n  \"output_dim\": " << net.output_dim() << ",\n  \"layers\": [";
  for (int i = 0; i < net.depth(); ++i) {
    const auto& layer = net.layer(i);
    out << (i ? ",\n" : "\n") << "    {\"rows\": " << layer.weight.rows()
        << ", \"cols\": " << layer.weight.cols() << ",\n     \"W\": [";
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        if (r || c) out << ", ";
        out << format_double(layer.weight(r, c));
      }
    }
    out << "],\n     \"b\": [";
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      if (r) out << ", ";
      out << format_double(layer.bias[r]);
    }
    out << "]}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

ReluNetwork network_from_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("network file: ") + e.what());
  }
  try {
    std::vector<DenseLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      const int rows = jl.at("rows").get<int>();
      const int cols = jl.at("cols").get<int>();
      const auto w = jl.at("W").get<std::vector<double>>();
      const auto bias = jl.at("b").get<std::vector<double>>();
      if (rows <= 0 || cols <= 0 ||
          w.size() != static_cast<std::size_t>(rows) * cols ||
          bias.size() != static_cast<std::size_t>(rows)) {
        throw std::invalid_argument("network file: layer shape does not match data");
      }
      DenseLayer layer;
      layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                    Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), rows, cols);
      layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
      layers.push_back(std::move(layer));
    }
    ReluNetwork net(std::move(layers));
    if (net.input_dim() != doc.at("input_dim").get<int>() ||
        net.output_dim() != doc.at("output_dim").get<int>()) {
      throw std::invalid_argument("network file: declared dims disagree with layers");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("network file: ") + e.what());
  }
}

void save_network(const ReluNetwork& net, const std::filesystem::path& path) {
  write_text_file(path, network_to_text(net));
}

ReluNetwork load_network(const std::filesystem::path& path) {
  return network_from_text(read_text_file(path));
}

}  // namespace nnmpc

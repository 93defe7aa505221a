#include "nnmpc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nnmpc/text_io.hpp"

namespace nnmpc {

Dataset generate_dataset(const PlantModel& plant, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("generate_dataset: count must be positive");
  const Box box = plant.boxes.network_input();
  Dataset d;
  d.inputs = sample_box(box.lower, box.upper, count, seed);
  const int n = plant.sys.state_dim();
  d.targets.resize(count, plant.sys.nonlinearity_dim());
  for (int r = 0; r < count; ++r) {
    d.targets.row(r) = plant.residual(d.inputs.row(r).head(n).transpose()).transpose();
  }
  return d;
}

namespace {

struct Adam {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  int t = 0;

  explicit Adam(const std::vector<DenseLayer>& layers) {
    for (const auto& l : layers) {
      mw.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      vw.push_back(mw.back());
      mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      vb.push_back(mb.back());
    }
  }

  void step(std::vector<DenseLayer>& layers, const Gradient& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      mw[i] = b1 * mw[i] + (1 - b1) * g.weight[i];
      vw[i] = b2 * vw[i] + (1 - b2) * g.weight[i].cwiseAbs2();
      layers[i].weight.array() -=
          lr * (mw[i].array() / c1) / ((vw[i].array() / c2).sqrt() + eps);
      mb[i] = b1 * mb[i] + (1 - b1) * g.bias[i];
      vb[i] = b2 * vb[i] + (1 - b2) * g.bias[i].cwiseAbs2();
      layers[i].bias.array() -= lr * (mb[i].array() / c1) / ((vb[i].array() / c2).sqrt() + eps);
    }
  }
};

double mse(const std::vector<DenseLayer>& layers, const RowMatrix& x, const RowMatrix& y,
           const std::vector<int>& idx, bool parallel) {
  if (idx.empty()) return 0.0;
  const int n = static_cast<int>(idx.size());
  const Gradient g = parallel ? mse_gradient_parallel(layers, x, y, idx, 0, n)
                              : mse_gradient_serial(layers, x, y, idx, 0, n);
  return g.loss;
}

}  // namespace

TrainResult train(const std::vector<int>& sizes, const Dataset& data,
                  const TrainSettings& st) {
  if (sizes.size() < 2) throw std::invalid_argument("train: need at least input and output sizes");
  if (sizes.front() != data.inputs.cols() || sizes.back() != data.targets.cols() ||
      data.inputs.rows() != data.targets.rows() || data.inputs.rows() < 2) {
    throw std::invalid_argument("train: layer sizes do not match the dataset");
  }
  if (st.epochs < 1 || st.batch < 1 || !(st.learning_rate > 0.0) ||
      !(st.validation_fraction >= 0.0 && st.validation_fraction < 1.0)) {
    throw std::invalid_argument("train: invalid hyper-parameters");
  }
  const int rows = static_cast<int>(data.inputs.rows());
  const int in_dim = sizes.front();
  const int out_dim = sizes.back();

  // Affine scaling of inputs to [−1, 1] and targets to zero mean, unit variance.
  const Eigen::RowVectorXd in_lo = data.inputs.colwise().minCoeff();
  const Eigen::RowVectorXd in_hi = data.inputs.colwise().maxCoeff();
  const Eigen::RowVectorXd in_mid = 0.5 * (in_lo + in_hi);
  const Eigen::RowVectorXd in_half =
      (0.5 * (in_hi - in_lo)).unaryExpr([](double v) { return v > 0.0 ? v : 1.0; });
  const Eigen::RowVectorXd out_mean = data.targets.colwise().mean();
  Eigen::RowVectorXd out_std =
      ((data.targets.rowwise() - out_mean).cwiseAbs2().colwise().sum() / rows).cwiseSqrt();
  out_std = out_std.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
  RowMatrix x = (data.inputs.rowwise() - in_mid).array().rowwise() / in_half.array();
  RowMatrix y = (data.targets.rowwise() - out_mean).array().rowwise() / out_std.array();

  std::mt19937_64 rng(st.seed);
  std::vector<int> perm(rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int n_val = std::min(rows - 1, static_cast<int>(std::lround(st.validation_fraction * rows)));
  std::vector<int> val(perm.begin(), perm.begin() + n_val);
  std::vector<int> order(perm.begin() + n_val, perm.end());
  const int n_train = static_cast<int>(order.size());

  std::vector<DenseLayer> layers;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw std::invalid_argument("train: layer width must be positive");
    const double limit = std::sqrt(6.0 / sizes[i - 1]);
    std::uniform_real_distribution<double> w(-limit, limit);
    std::uniform_real_distribution<double> bias(-0.1, 0.1);
    DenseLayer l{Eigen::MatrixXd(sizes[i], sizes[i - 1]), Eigen::VectorXd(sizes[i])};
    for (int r = 0; r < sizes[i]; ++r) {
      for (int c = 0; c < sizes[i - 1]; ++c) l.weight(r, c) = w(rng);
      l.bias[r] = bias(rng);
    }
    layers.push_back(std::move(l));
  }

  Adam adam(layers);
  TrainResult result{ReluNetwork(layers), {}, 0, std::numeric_limits<double>::infinity()};
  std::vector<DenseLayer> best = layers;
  const double decay =
      st.epochs > 1 ? std::pow(st.final_learning_rate / st.learning_rate, 1.0 / (st.epochs - 1))
                    : 1.0;
  double lr = st.learning_rate;
  for (int epoch = 1; epoch <= st.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_sum = 0.0;
    for (int first = 0; first < n_train; first += st.batch) {
      const int count = std::min(st.batch, n_train - first);
      const Gradient g = st.parallel ? mse_gradient_parallel(layers, x, y, order, first, count)
                                     : mse_gradient_serial(layers, x, y, order, first, count);
      if (!std::isfinite(g.loss)) {
        throw std::runtime_error("train: loss became non-finite at epoch " +
                                 std::to_string(epoch) + "; use a smaller learning rate");
      }
      train_sum += g.loss * count;
      adam.step(layers, g, lr);
    }
    lr *= decay;
    // Losses are logged in original target units.
    const double unit = out_std.squaredNorm() / out_dim;
    TrainLogEntry e{epoch, unit * train_sum / n_train,
                    unit * (n_val ? mse(layers, x, y, val, st.parallel) : train_sum / n_train)};
    if (!std::isfinite(e.val_mse)) {
      throw std::runtime_error("train: validation loss became non-finite; use a smaller learning rate");
    }
    result.log.push_back(e);
    if (e.val_mse < result.best_val_mse) {
      result.best_val_mse = e.val_mse;
      result.best_epoch = epoch;
      best = layers;
    }
  }

  // Fold the scalings: x̃ = (x − mid) / half, f = std · f̃ + mean.
  const Eigen::VectorXd inv_half = in_half.cwiseInverse().transpose();
  best.front().bias -= best.front().weight * (inv_half.cwiseProduct(in_mid.transpose()));
  best.front().weight = best.front().weight * inv_half.asDiagonal();
  best.back().weight = out_std.transpose().asDiagonal() * best.back().weight;
  best.back().bias = out_std.transpose().cwiseProduct(best.back().bias) + out_mean.transpose();
  result.net = ReluNetwork(std::move(best));
  (void)in_dim;
  return result;
}

double grid_rmse(const ReluNetwork& net, const PlantModel& plant, int per_axis) {
  if (per_axis < 2) throw std::invalid_argument("grid_rmse: need at least 2 points per axis");
  const Box box = plant.boxes.network_input();
  const int d = box.dim();
  const int n = plant.sys.state_dim();
  long total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  RowMatrix pts(total, d);
  for (long k = 0; k < total; ++k) {
    long rem = k;
    for (int i = 0; i < d; ++i) {
      const int idx = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      pts(k, i) = box.lower[i] + (box.upper[i] - box.lower[i]) * idx / (per_axis - 1);
    }
  }
  const RowMatrix out = forward_batch_parallel(net, pts);
  double sum = 0.0;
  for (long k = 0; k < total; ++k) {
    sum += (out.row(k).transpose() - plant.residual(pts.row(k).head(n).transpose())).squaredNorm();
  }
  return std::sqrt(sum / (total * net.output_dim()));
}

std::string training_log_to_csv(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  out << "epoch,train_mse,val_mse\n";
  for (const auto& e : log) {
    out << e.epoch << "," << format_double(e.train_mse) << "," << format_double(e.val_mse) << "\n";
  }
  return out.str();
}

}  // namespace nnmpc

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnmpc/kernels.hpp"
#include "nnmpc/plant.hpp"
#include "nnmpc/relu_network.hpp"

namespace nnmpc {

struct Dataset {
  RowMatrix inputs;   // one (x, u) sample per row
  RowMatrix targets;  // f(x) per row
};

/// `count` samples drawn uniformly from X × U with targets from the plant
/// residual. Deterministic for a fixed seed.
Dataset generate_dataset(const PlantModel& plant, int count, std::uint64_t seed);

struct TrainSettings {
  int epochs = 200;
  int batch = 128;
  double learning_rate = 1e-2;
  double final_learning_rate = 1e-5;  // reached by geometric decay at the last epoch
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  bool parallel = false;  // OpenMP gradient kernel; sweeps parallelize across networks instead
};

struct TrainLogEntry {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  ReluNetwork net;  // best-validation weights, in original units
  std::vector<TrainLogEntry> log;
  int best_epoch = 0;
  double best_val_mse = 0.0;
};

/// Adam on mean-squared error. `sizes` lists layer widths from input to
/// output. Inputs are scaled to [−1, 1] and targets standardized during
/// training; both maps are folded into the returned weights. Throws
/// std::runtime_error if the loss becomes non-finite.
TrainResult train(const std::vector<int>& sizes, const Dataset& data,
                  const TrainSettings& settings);

/// Root-mean-square error of `net` against the plant residual on a regular
/// grid over X × U with `per_axis` points per coordinate.
double grid_rmse(const ReluNetwork& net, const PlantModel& plant, int per_axis);

/// Columns epoch,train_mse,val_mse.
std::string training_log_to_csv(const std::vector<TrainLogEntry>& log);

}  // namespace nnmpc

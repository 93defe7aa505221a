#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nnmpc/closed_loop.hpp"
#include "nnmpc/trainer.hpp"

namespace nnmpc {

/// Invalid or unparseable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  std::vector<int> widths{10, 20, 50, 100, 200};
  std::vector<int> depths{1, 2, 4, 5};
  int depth_width = 10;
  std::vector<int> horizons{2, 3, 4, 5};
  int horizon_width = 50;
  std::vector<Method> methods{Method::kMip, Method::kLr, Method::kElr};
};

/// Everything a command needs; defaults are the pendulum example settings.
struct RunConfig {
  PendulumParameters plant;
  double u_max = 3.0;
  Eigen::Vector2d x_max{M_PI / 2, 5.0};
  // Diagonals of the weight matrices.
  Eigen::VectorXd Q = Eigen::Vector2d(1e5, 1e2);
  Eigen::VectorXd R = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd Phi = Eigen::VectorXd::Constant(1, 100.0);
  Eigen::VectorXd R_s = Eigen::VectorXd::Constant(1, 1.0);
  double y_ref = M_PI / 5;
  Eigen::VectorXd x0 = Eigen::Vector2d::Zero();
  int horizon = 1;
  Method method = Method::kMip;
  int steps = 100;
  std::uint64_t seed = 1;
  TargetMethod target = TargetMethod::kExact;
  DisturbanceBounds disturbance = DisturbanceBounds::kAuto;
  InputRows rpi_input_rows = InputRows::kAuto;
  std::vector<int> hidden{10};
  std::string network;  // network file; trained from `train` when empty
  int train_samples = 20000;
  TrainSettings train;
  int node_limit = 20000;
  double gap_tol = 1e-6;
  BenchConfig bench;
};

/// Overlays the keys present in `doc` on `base`; unknown keys are errors.
RunConfig config_from_json(const nlohmann::json& doc, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

PlantModel make_plant(const RunConfig& config);
DesignOptions design_options(const RunConfig& config);

/// Input, hidden and output widths of a pendulum network.
std::vector<int> network_shape(const std::vector<int>& hidden);

struct NetworkArtifact {
  ReluNetwork net;
  std::filesystem::path path;
  std::string hash;        // git blob hash of the network file
  double grid_rmse = 0.0;  // against the plant residual, 11 points per axis
  bool trained = false;    // false when reused from the cache
};

/// Loads `cache_dir/<name>.json` when it exists and was produced by the same
/// training settings, otherwise trains, saves network, log and metadata.
NetworkArtifact obtain_network(const RunConfig& config, const std::vector<int>& hidden,
                               const std::filesystem::path& cache_dir);

/// Loads a network file and records its hash.
NetworkArtifact load_network_artifact(const std::filesystem::path& path,
                                      const PlantModel& plant);

enum class BenchCase { kWidth, kDepth, kHorizon };

std::string_view to_string(BenchCase c);
BenchCase parse_bench_case(std::string_view text);

struct BenchCell {
  BenchCase kind = BenchCase::kWidth;
  std::vector<int> hidden;
  int horizon = 1;
  std::string name;  // e.g. "h50" or "h10x10x10"
};

std::vector<BenchCell> bench_cells(const RunConfig& config, BenchCase kind);

struct RunOutcome {
  // "ok", "target_infeasible", "target_unresolved", "no_invariant_set",
  // "halted" or "error"
  std::string status;
  Method method = Method::kMip;
  int horizon = 1;
  Trajectory trajectory;
  Metrics metrics;
  double max_abs_u = 0.0;    // over applied inputs
  bool input_feasible = true;  // every optimal step within U
  std::string message;
  bool ok() const { return status == "ok"; }
};

/// Designs the controller for `net` and simulates `config.steps` steps from
/// `config.x0` for each method. Design failures are reported per method.
std::vector<RunOutcome> run_methods(const RunConfig& config, const ReluNetwork& net,
                                    const std::vector<Method>& methods, int horizon);

/// One table row per (cell, method).
struct BenchRow {
  BenchCell cell;
  RunOutcome outcome;
  std::string network_hash;
  double network_rmse = 0.0;
};

std::string bench_table_csv(const std::vector<BenchRow>& rows);

}  // namespace nnmpc

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnmpc/benchmark.hpp"
#include "nnmpc/polytope.hpp"
#include "nnmpc/text_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nnmpc;

namespace {

constexpr int kExitCellFailure = 1;
constexpr int kExitConfigError = 2;

struct Options {
  std::string config;
  std::string network;
  std::string out = "out";
  std::optional<std::string> method;
  std::optional<int> horizon;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> y_ref;
  int jobs = 1;
  std::string bench_case = "all";
};

RunConfig resolve(const Options& o) {
  json overrides = json::object();
  if (o.method) overrides["method"] = *o.method;
  if (o.horizon) overrides["horizon"] = *o.horizon;
  if (o.steps) overrides["steps"] = *o.steps;
  if (o.seed) overrides["seed"] = *o.seed;
  if (o.y_ref) overrides["y_ref"] = *o.y_ref;
  if (!o.network.empty()) overrides["network"] = o.network;
  const RunConfig base = o.config.empty() ? config_from_json(json::object()) : load_config(o.config);
  return config_from_json(overrides, base);
}

json network_entry(const NetworkArtifact& a) {
  return {{"path", a.path.string()}, {"git_blob_hash", a.hash}, {"grid_rmse", a.grid_rmse}};
}

NetworkArtifact network_for(const RunConfig& c, const fs::path& out) {
  if (!c.network.empty()) return load_network_artifact(c.network, make_plant(c));
  return obtain_network(c, c.hidden, out / "networks");
}

void write_report(const fs::path& path, const std::string& command, const RunConfig& c,
                  const std::vector<NetworkArtifact>& nets, json results) {
  json doc{{"command", command}, {"config", config_to_json(c)}, {"networks", json::array()}};
  for (const auto& n : nets) doc["networks"].push_back(network_entry(n));
  doc["results"] = std::move(results);
  write_text_file(path, doc.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

json metrics_json(const RunOutcome& r) {
  json j{{"method", to_string(r.method)}, {"horizon", r.horizon}, {"status", r.status},
         {"message", r.message}, {"steps", r.trajectory.size()},
         {"state_violations", r.trajectory.state_violations}, {"max_abs_u", r.max_abs_u},
         {"input_feasible", r.input_feasible}};
  if (r.trajectory.size() > 0) {
    j["steady_error"] = r.metrics.steady_error;
    j["steady_error_absolute"] = r.metrics.absolute;
    j["max_solve_time_s"] = r.metrics.max_solve_time;
    j["mean_solve_time_s"] = r.metrics.mean_solve_time;
  }
  return j;
}

int cmd_train(const Options& o) {
  const RunConfig c = resolve(o);
  const auto a = obtain_network(c, c.hidden, o.out);
  std::cout << (a.trained ? "trained " : "reused ") << a.path.string() << " (grid RMSE "
            << a.grid_rmse << ")\n";
  write_report(fs::path(o.out) / "train.json", "train", c, {a},
               {{"trained", a.trained}, {"grid_rmse", a.grid_rmse}});
  return 0;
}

int cmd_bounds(const Options& o) {
  const RunConfig c = resolve(o);
  const auto a = network_for(c, o.out);
  const Box in = make_plant(c).boxes.network_input();
  const LayerBounds b = propagate_bounds(a.net, in.lower, in.upper);
  const auto status = classify_neurons(b);
  const Box relaxed = relaxed_output_bounds(a.net, b);
  json layers = json::array();
  for (std::size_t l = 0; l < b.pre_lower.size(); ++l) {
    int counts[3] = {0, 0, 0};
    for (auto s : status[l]) ++counts[static_cast<int>(s)];
    layers.push_back({{"pre_lower", std::vector<double>(b.pre_lower[l].data(), b.pre_lower[l].data() + b.pre_lower[l].size())},
                      {"pre_upper", std::vector<double>(b.pre_upper[l].data(), b.pre_upper[l].data() + b.pre_upper[l].size())},
                      {"inactive", counts[0]}, {"active", counts[1]}, {"unstable", counts[2]}});
  }
  json results{{"layers", layers},
               {"output_interval", {b.output_lower[0], b.output_upper[0]}},
               {"output_relaxed", {relaxed.lower[0], relaxed.upper[0]}},
               {"unstable", count_status(status, NeuronStatus::kUnstable)}};
  std::cout << "unstable neurons: " << results["unstable"] << ", output interval ["
            << b.output_lower[0] << ", " << b.output_upper[0] << "]\n";
  write_report(fs::path(o.out) / "bounds.json", "bounds", c, {a}, results);
  return 0;
}

int cmd_target(const Options& o) {
  const RunConfig c = resolve(o);
  const auto a = network_for(c, o.out);
  const PlantModel plant = make_plant(c);
  const DesignOptions opt = design_options(c);
  const SteadyTarget t =
      c.target == TargetMethod::kExact
          ? steady_state_exact(plant.sys, a.net, opt.y_ref, opt.R_s, plant.boxes, opt.mpc.miqp)
          : steady_state_search(plant.sys, a.net, opt.y_ref, opt.R_s, plant.boxes, opt.search);
  json results{{"status", std::string(to_string(t.status))}};
  if (t.x.size() > 0) {
    results["x"] = {t.x[0], t.x[1]};
    results["u"] = t.u[0];
    results["f"] = t.f[0];
    results["residual"] = t.residual;
  }
  std::cout << "target " << to_string(t.status);
  if (t.x.size() > 0) std::cout << ": x* = (" << t.x[0] << ", " << t.x[1] << "), u* = " << t.u[0];
  std::cout << "\n";
  write_report(fs::path(o.out) / "target.json", "target", c, {a}, results);
  return t.status == TargetStatus::kInfeasible || t.status == TargetStatus::kUnresolved
             ? kExitCellFailure
             : 0;
}

int cmd_terminal(const Options& o) {
  const RunConfig c = resolve(o);
  const auto a = network_for(c, o.out);
  try {
    const auto d = design_controller(make_plant(c), a.net, design_options(c));
    save_polytope(d.state.terminal, fs::path(o.out) / "terminal_set.json");
    json results{{"rows", d.state.terminal.num_rows()}, {"iterations", d.rpi.iterations},
                 {"input_rows", d.rpi.input_rows}, {"note", d.rpi.note},
                 {"disturbance_source", d.disturbance_source},
                 {"disturbance", {d.disturbance.lower[1], d.disturbance.upper[1]}},
                 {"K", {d.lqr.K(0, 0), d.lqr.K(0, 1)}},
                 {"spectral_radius", d.lqr.spectral_radius}};
    std::cout << "terminal set with " << d.state.terminal.num_rows() << " rows ("
              << d.disturbance_source << " bounds)\n";
    write_report(fs::path(o.out) / "terminal.json", "terminal", c, {a}, results);
    return 0;
  } catch (const std::runtime_error& e) {
    std::cerr << "terminal: " << e.what() << "\n";
    write_report(fs::path(o.out) / "terminal.json", "terminal", c, {a}, {{"error", e.what()}});
    return kExitCellFailure;
  }
}

int cmd_run(const Options& o) {
  const RunConfig c = resolve(o);
  const auto a = network_for(c, o.out);
  const auto r = run_methods(c, a.net, {c.method}, c.horizon).front();
  if (r.trajectory.size() > 0) save_trajectory(r.trajectory, fs::path(o.out) / "trajectory.csv");
  std::cout << to_string(r.method) << ": " << r.status;
  if (r.trajectory.size() > 0) {
    std::cout << ", steady error " << r.metrics.steady_error << (r.metrics.absolute ? "" : "%")
              << ", max solve " << r.metrics.max_solve_time << " s";
  }
  if (!r.message.empty()) std::cout << " (" << r.message << ")";
  std::cout << "\n";
  write_report(fs::path(o.out) / "run.json", "run", c, {a}, metrics_json(r));
  return r.ok() ? 0 : kExitCellFailure;
}

int cmd_bench(const Options& o) {
  const RunConfig c = resolve(o);
  std::vector<BenchCase> cases;
  if (o.bench_case == "all") {
    cases = {BenchCase::kWidth, BenchCase::kDepth, BenchCase::kHorizon};
  } else {
    cases = {parse_bench_case(o.bench_case)};
  }
  if (o.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const fs::path out = o.out;
  std::vector<BenchCell> cells;
  for (auto k : cases) {
    for (auto& cell : bench_cells(c, k)) cells.push_back(std::move(cell));
  }
  // Train each distinct shape once; trainings are independent.
  std::map<std::vector<int>, int> shape_index;
  std::vector<std::vector<int>> shapes;
  for (const auto& cell : cells) {
    if (shape_index.emplace(cell.hidden, static_cast<int>(shapes.size())).second) {
      shapes.push_back(cell.hidden);
    }
  }
  std::vector<NetworkArtifact> nets(shapes.size());
  std::vector<std::string> errors(shapes.size());
#pragma omp parallel for schedule(dynamic) num_threads(o.jobs)
  for (int i = 0; i < static_cast<int>(shapes.size()); ++i) {
    try {
      nets[i] = obtain_network(c, shapes[i], out / "networks");
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("training failed: " + errors[i]);
    std::cout << "network " << nets[i].path.filename().string() << " grid RMSE "
              << nets[i].grid_rmse << (nets[i].trained ? " (trained)" : " (cached)") << "\n";
  }

  std::vector<std::vector<RunOutcome>> outcomes(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(o.jobs)
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    outcomes[i] = run_methods(c, nets[shape_index.at(cells[i].hidden)].net, c.bench.methods,
                              cells[i].horizon);
  }

  int failures = 0;
  std::map<BenchCase, std::vector<BenchRow>> tables;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& net = nets[shape_index.at(cells[i].hidden)];
    for (auto& r : outcomes[i]) {
      if (r.trajectory.size() > 0) {
        save_trajectory(r.trajectory, out / "trajectories" /
                                          (std::string(to_string(cells[i].kind)) + "_" +
                                           cells[i].name + "_" + std::string(to_string(r.method)) + ".csv"));
      }
      failures += !r.ok();
      std::cout << to_string(cells[i].kind) << " " << cells[i].name << " " << to_string(r.method)
                << ": " << r.status;
      if (r.trajectory.size() > 0) {
        std::cout << ", error " << r.metrics.steady_error << "%, max solve "
                  << r.metrics.max_solve_time << " s";
      }
      std::cout << "\n";
      tables[cells[i].kind].push_back({cells[i], std::move(r), net.hash, net.grid_rmse});
    }
  }
  for (const auto& [kind, rows] : tables) {
    const std::string name = "bench_" + std::string(to_string(kind));
    write_text_file(out / (name + ".csv"), bench_table_csv(rows));
    std::vector<NetworkArtifact> used;
    json results = json::array();
    std::set<std::string> seen;
    for (const auto& row : rows) {
      auto j = metrics_json(row.outcome);
      j["cell"] = row.cell.name;
      j["network_hash"] = row.network_hash;
      results.push_back(j);
      const auto& a = nets[shape_index.at(row.cell.hidden)];
      if (seen.insert(a.hash).second) used.push_back(a);
    }
    write_report(out / (name + ".json"), "bench " + std::string(to_string(kind)), c, used, results);
  }
  std::cout << failures << " of " << cells.size() * c.bench.methods.size() << " runs failed\n";
  return failures ? kExitCellFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-mode MPC with ReLU network models: training, design, simulation, benchmarks"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "seed for data, training and search");
    sub->add_option("--network", o.network, "network file (trained when omitted)");
    sub->add_option("--y-ref", o.y_ref, "output reference in rad");
  };
  auto add_mpc = [&](CLI::App* sub) {
    sub->add_option("--method", o.method, "mip, lr or elr")
        ->check(CLI::IsMember({"mip", "lr", "elr"}));
    sub->add_option("--horizon", o.horizon, "prediction horizon N")->check(CLI::PositiveNumber);
    sub->add_option("--steps", o.steps, "closed-loop steps")->check(CLI::PositiveNumber);
  };
  std::map<std::string, int (*)(const Options&)> handlers{
      {"train", cmd_train}, {"bounds", cmd_bounds}, {"target", cmd_target},
      {"terminal", cmd_terminal}, {"run", cmd_run}, {"bench", cmd_bench}};
  std::map<std::string, std::string> help{
      {"train", "train a pendulum network"},
      {"bounds", "interval and relaxed bounds of a network"},
      {"target", "steady-state target for the reference"},
      {"terminal", "invariant and terminal sets"},
      {"run", "closed-loop simulation with one method"},
      {"bench", "width, depth and horizon benchmark cases"}};
  for (const auto& [name, fn] : handlers) {
    auto* sub = app.add_subcommand(name, help[name]);
    add_common(sub);
    if (name != "train" && name != "bounds") add_mpc(sub);
    if (name == "bench") {
      sub->add_option("--case", o.bench_case, "width, depth, horizon or all")
          ->check(CLI::IsMember({"width", "depth", "horizon", "all"}));
      sub->add_option("--jobs", o.jobs, "cells run in parallel")->check(CLI::PositiveNumber);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }
  try {
    fs::create_directories(o.out);
    for (const auto& [name, fn] : handlers) {
      if (app.got_subcommand(name)) return fn(o);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCellFailure;
  }
  return kExitConfigError;
}

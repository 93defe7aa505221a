#include "nnmpc/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nnmpc/text_io.hpp"

namespace nnmpc {

namespace {

using nlohmann::json;

Eigen::VectorXd to_vector(const json& j, const char* key) {
  const auto v = j.get<std::vector<double>>();
  if (v.empty()) throw ConfigError(std::string(key) + ": empty vector");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json from_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

InputRows parse_input_rows(std::string_view text) {
  if (text == "auto") return InputRows::kAuto;
  if (text == "always") return InputRows::kAlways;
  if (text == "never") return InputRows::kNever;
  throw ConfigError("unknown rpi_input_rows '" + std::string(text) + "' (auto, always or never)");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::vector<int> positive_ints(const json& j, const char* key) {
  auto v = j.get<std::vector<int>>();
  for (int x : v) {
    if (x < 1) throw ConfigError(std::string(key) + ": entries must be positive");
  }
  return v;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  const auto& p = c.plant;
  if (!(p.ts > 0 && p.m > 0 && p.l > 0) || !std::isfinite(p.g) || !std::isfinite(p.c)) {
    fail("plant: ts, m and l must be positive");
  }
  if (!(c.u_max > 0) || !(c.x_max.array() > 0).all()) fail("u_max and x_max must be positive");
  if (c.Q.size() != 2 || (c.Q.array() < 0).any()) fail("Q: two non-negative diagonal entries");
  if (c.R.size() != 1 || !(c.R[0] > 0)) fail("R: one positive diagonal entry");
  if (c.Phi.size() != 1 || c.Phi[0] < 0) fail("Phi: one non-negative diagonal entry");
  if (c.R_s.size() != 1 || c.R_s[0] < 0) fail("R_s: one non-negative diagonal entry");
  if (c.x0.size() != 2) fail("x0: two entries");
  if (!std::isfinite(c.y_ref)) fail("y_ref must be finite");
  if (c.horizon < 1) fail("horizon must be at least 1");
  if (c.steps < 1) fail("steps must be at least 1");
  if (c.hidden.empty()) fail("hidden: at least one hidden layer");
  if (c.train_samples < 2) fail("train.samples must be at least 2");
  if (c.train.epochs < 1 || c.train.batch < 1 || !(c.train.learning_rate > 0) ||
      !(c.train.final_learning_rate > 0)) {
    fail("train: epochs, batch and learning rates must be positive");
  }
  if (c.node_limit < 1 || !(c.gap_tol >= 0)) fail("solver: node_limit ≥ 1 and gap ≥ 0");
  if (c.bench.methods.empty()) fail("bench.methods must not be empty");
  if (c.bench.depth_width < 1 || c.bench.horizon_width < 1) fail("bench widths must be positive");
  for (int n : c.bench.horizons) {
    if (n < 1) fail("bench.horizons must be positive");
  }
}

}  // namespace

RunConfig config_from_json(const json& doc, const RunConfig& base) {
  RunConfig c = base;
  try {
    check_keys(doc,
               {"plant", "u_max", "x_max", "Q", "R", "Phi", "R_s", "y_ref", "x0", "horizon",
                "method", "steps", "seed", "target", "disturbance", "rpi_input_rows", "hidden",
                "network", "train", "solver", "bench"},
               "config");
    if (doc.contains("plant")) {
      const auto& p = doc["plant"];
      check_keys(p, {"ts", "m", "l", "g", "c"}, "plant");
      if (p.contains("ts")) c.plant.ts = p["ts"].get<double>();
      if (p.contains("m")) c.plant.m = p["m"].get<double>();
      if (p.contains("l")) c.plant.l = p["l"].get<double>();
      if (p.contains("g")) c.plant.g = p["g"].get<double>();
      if (p.contains("c")) c.plant.c = p["c"].get<double>();
    }
    if (doc.contains("u_max")) c.u_max = doc["u_max"].get<double>();
    if (doc.contains("x_max")) {
      const auto v = to_vector(doc["x_max"], "x_max");
      if (v.size() != 2) throw ConfigError("x_max: two entries");
      c.x_max = v;
    }
    if (doc.contains("Q")) c.Q = to_vector(doc["Q"], "Q");
    if (doc.contains("R")) c.R = to_vector(doc["R"], "R");
    if (doc.contains("Phi")) c.Phi = to_vector(doc["Phi"], "Phi");
    if (doc.contains("R_s")) c.R_s = to_vector(doc["R_s"], "R_s");
    if (doc.contains("y_ref")) c.y_ref = doc["y_ref"].get<double>();
    if (doc.contains("x0")) c.x0 = to_vector(doc["x0"], "x0");
    if (doc.contains("horizon")) c.horizon = doc["horizon"].get<int>();
    if (doc.contains("method")) c.method = parse_method(doc["method"].get<std::string>());
    if (doc.contains("steps")) c.steps = doc["steps"].get<int>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("target")) c.target = parse_target_method(doc["target"].get<std::string>());
    if (doc.contains("disturbance")) {
      c.disturbance = parse_disturbance_bounds(doc["disturbance"].get<std::string>());
    }
    if (doc.contains("rpi_input_rows")) {
      c.rpi_input_rows = parse_input_rows(doc["rpi_input_rows"].get<std::string>());
    }
    if (doc.contains("hidden")) c.hidden = positive_ints(doc["hidden"], "hidden");
    if (doc.contains("network")) c.network = doc["network"].get<std::string>();
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      check_keys(t, {"samples", "epochs", "batch", "lr", "final_lr", "validation_fraction"},
                 "train");
      if (t.contains("samples")) c.train_samples = t["samples"].get<int>();
      if (t.contains("epochs")) c.train.epochs = t["epochs"].get<int>();
      if (t.contains("batch")) c.train.batch = t["batch"].get<int>();
      if (t.contains("lr")) c.train.learning_rate = t["lr"].get<double>();
      if (t.contains("final_lr")) c.train.final_learning_rate = t["final_lr"].get<double>();
      if (t.contains("validation_fraction")) {
        c.train.validation_fraction = t["validation_fraction"].get<double>();
      }
    }
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      check_keys(s, {"node_limit", "gap"}, "solver");
      if (s.contains("node_limit")) c.node_limit = s["node_limit"].get<int>();
      if (s.contains("gap")) c.gap_tol = s["gap"].get<double>();
    }
    if (doc.contains("bench")) {
      const auto& b = doc["bench"];
      check_keys(b, {"widths", "depths", "depth_width", "horizons", "horizon_width", "methods"},
                 "bench");
      if (b.contains("widths")) c.bench.widths = positive_ints(b["widths"], "bench.widths");
      if (b.contains("depths")) c.bench.depths = positive_ints(b["depths"], "bench.depths");
      if (b.contains("depth_width")) c.bench.depth_width = b["depth_width"].get<int>();
      if (b.contains("horizons")) c.bench.horizons = b["horizons"].get<std::vector<int>>();
      if (b.contains("horizon_width")) c.bench.horizon_width = b["horizon_width"].get<int>();
      if (b.contains("methods")) {
        c.bench.methods.clear();
        for (const auto& m : b["methods"]) c.bench.methods.push_back(parse_method(m.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.train.seed = c.seed;
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.bench.methods) methods.emplace_back(to_string(m));
  return json{
      {"plant", {{"ts", c.plant.ts}, {"m", c.plant.m}, {"l", c.plant.l}, {"g", c.plant.g},
                 {"c", c.plant.c}}},
      {"u_max", c.u_max},
      {"x_max", from_vector(c.x_max)},
      {"Q", from_vector(c.Q)},
      {"R", from_vector(c.R)},
      {"Phi", from_vector(c.Phi)},
      {"R_s", from_vector(c.R_s)},
      {"y_ref", c.y_ref},
      {"x0", from_vector(c.x0)},
      {"horizon", c.horizon},
      {"method", to_string(c.method)},
      {"steps", c.steps},
      {"seed", c.seed},
      {"target", to_string(c.target)},
      {"disturbance", to_string(c.disturbance)},
      {"rpi_input_rows", to_string(c.rpi_input_rows)},
      {"hidden", c.hidden},
      {"network", c.network},
      {"train", {{"samples", c.train_samples}, {"epochs", c.train.epochs},
                 {"batch", c.train.batch}, {"lr", c.train.learning_rate},
                 {"final_lr", c.train.final_learning_rate},
                 {"validation_fraction", c.train.validation_fraction}}},
      {"solver", {{"node_limit", c.node_limit}, {"gap", c.gap_tol}}},
      {"bench", {{"widths", c.bench.widths}, {"depths", c.bench.depths},
                 {"depth_width", c.bench.depth_width}, {"horizons", c.bench.horizons},
                 {"horizon_width", c.bench.horizon_width}, {"methods", methods}}},
  };
}

PlantModel make_plant(const RunConfig& c) {
  PlantModel plant = pendulum_plant(c.plant);
  plant.boxes.input = {Eigen::VectorXd::Constant(1, -c.u_max), Eigen::VectorXd::Constant(1, c.u_max)};
  plant.boxes.state = {-c.x_max, c.x_max};
  return plant;
}

DesignOptions design_options(const RunConfig& c) {
  DesignOptions o;
  o.Q = c.Q.asDiagonal();
  o.R = c.R.asDiagonal();
  o.Phi = c.Phi.asDiagonal();
  o.R_s = c.R_s.asDiagonal();
  o.y_ref = Eigen::VectorXd::Constant(1, c.y_ref);
  o.target = c.target;
  o.search.seed = c.seed;
  o.rpi.input_rows = c.rpi_input_rows;
  o.disturbance = c.disturbance;
  o.mpc.horizon = c.horizon;
  o.mpc.method = c.method;
  o.mpc.miqp.node_limit = c.node_limit;
  o.mpc.miqp.gap_tol = c.gap_tol;
  return o;
}

std::vector<int> network_shape(const std::vector<int>& hidden) {
  std::vector<int> shape{3};
  shape.insert(shape.end(), hidden.begin(), hidden.end());
  shape.push_back(1);
  return shape;
}

namespace {

std::string shape_name(const std::vector<int>& hidden) {
  std::string name = "h";
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    name += (i ? "x" : "") + std::to_string(hidden[i]);
  }
  return name;
}

json training_key(const RunConfig& c, const std::vector<int>& hidden) {
  const auto full = config_to_json(c);
  return json{{"plant", full["plant"]}, {"u_max", c.u_max}, {"x_max", full["x_max"]},
              {"hidden", hidden}, {"seed", c.seed}, {"train", full["train"]}};
}

}  // namespace

NetworkArtifact load_network_artifact(const std::filesystem::path& path, const PlantModel& plant) {
  NetworkArtifact a;
  const std::string text = read_text_file(path);
  a.net = network_from_text(text);
  a.path = path;
  a.hash = git_blob_hash(text);
  if (a.net.input_dim() != 3 || a.net.output_dim() != 1) {
    throw std::invalid_argument(path.string() + ": pendulum networks map 3 inputs to 1 output");
  }
  a.grid_rmse = grid_rmse(a.net, plant, 11);
  return a;
}

NetworkArtifact obtain_network(const RunConfig& c, const std::vector<int>& hidden,
                               const std::filesystem::path& cache_dir) {
  const PlantModel plant = make_plant(c);
  const std::string name = shape_name(hidden) + "_s" + std::to_string(c.seed);
  const auto net_path = cache_dir / (name + ".json");
  const auto meta_path = cache_dir / (name + ".meta.json");
  const json key = training_key(c, hidden);
  if (std::filesystem::exists(net_path) && std::filesystem::exists(meta_path)) {
    try {
      if (json::parse(read_text_file(meta_path)) == key) return load_network_artifact(net_path, plant);
    } catch (const json::exception&) {
      // Unreadable metadata: retrain below.
    }
  }
  const Dataset data = generate_dataset(plant, c.train_samples, c.seed);
  TrainSettings st = c.train;
  st.seed = c.seed;
  const TrainResult res = train(network_shape(hidden), data, st);
  std::filesystem::create_directories(cache_dir);
  save_network(res.net, net_path);
  write_text_file(cache_dir / (name + ".log.csv"), training_log_to_csv(res.log));
  write_text_file(meta_path, key.dump(2) + "\n");
  NetworkArtifact a = load_network_artifact(net_path, plant);
  a.trained = true;
  return a;
}

std::string_view to_string(BenchCase c) {
  switch (c) {
    case BenchCase::kWidth: return "width";
    case BenchCase::kDepth: return "depth";
    case BenchCase::kHorizon: return "horizon";
  }
  return "unknown";
}

BenchCase parse_bench_case(std::string_view text) {
  if (text == "width") return BenchCase::kWidth;
  if (text == "depth") return BenchCase::kDepth;
  if (text == "horizon") return BenchCase::kHorizon;
  throw std::invalid_argument("unknown bench case '" + std::string(text) +
                              "' (width, depth or horizon)");
}

std::vector<BenchCell> bench_cells(const RunConfig& c, BenchCase kind) {
  std::vector<BenchCell> cells;
  switch (kind) {
    case BenchCase::kWidth:
      for (int w : c.bench.widths) cells.push_back({kind, {w}, 1, shape_name({w})});
      break;
    case BenchCase::kDepth:
      for (int d : c.bench.depths) {
        std::vector<int> hidden(d, c.bench.depth_width);
        cells.push_back({kind, hidden, 1, shape_name(hidden)});
      }
      break;
    case BenchCase::kHorizon:
      for (int n : c.bench.horizons) {
        cells.push_back({kind, {c.bench.horizon_width}, n,
                         shape_name({c.bench.horizon_width}) + "_N" + std::to_string(n)});
      }
      break;
  }
  return cells;
}

std::vector<RunOutcome> run_methods(const RunConfig& c, const ReluNetwork& net,
                                    const std::vector<Method>& methods, int horizon) {
  const PlantModel plant = make_plant(c);
  DesignOptions opt = design_options(c);
  opt.mpc.horizon = horizon;
  std::vector<RunOutcome> out;
  auto fail_all = [&](const std::string& status, const std::string& message) {
    for (Method m : methods) {
      RunOutcome r;
      r.status = status;
      r.method = m;
      r.horizon = horizon;
      r.message = message;
      out.push_back(std::move(r));
    }
    return out;
  };
  ControllerDesign design;
  try {
    design = design_controller(plant, net, opt);
  } catch (const TargetError& e) {
    return fail_all(e.status() == TargetStatus::kInfeasible ? "target_infeasible"
                                                            : "target_unresolved",
                    e.what());
  } catch (const std::runtime_error& e) {
    return fail_all("no_invariant_set", e.what());
  }
  for (Method m : methods) {
    RunOutcome r;
    r.method = m;
    r.horizon = horizon;
    ControllerState state = design.state;
    state.config.method = m;
    try {
      r.trajectory = simulate(state, plant, c.x0, c.steps);
      r.metrics = metrics(r.trajectory, c.y_ref);
      for (int k = 0; k < r.trajectory.size(); ++k) {
        const auto& u = r.trajectory.u[k];
        if (!u.allFinite()) continue;
        r.max_abs_u = std::max(r.max_abs_u, u.cwiseAbs().maxCoeff());
        if (r.trajectory.status[k] == StepStatus::kOptimal &&
            !plant.boxes.input.contains(u, 0.0)) {
          r.input_feasible = false;
        }
      }
      r.status = r.trajectory.halted ? "halted" : "ok";
      r.message = r.trajectory.message;
    } catch (const std::exception& e) {
      r.status = "error";
      r.message = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string bench_table_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "case,cell,hidden,horizon,method,status,steady_error_pct,max_solve_time_s,"
         "mean_solve_time_s,steps,state_violations,max_abs_u,network_rmse,network_hash,message\n";
  auto quote = [](std::string s) {
    std::replace(s.begin(), s.end(), '"', '\'');
    return "\"" + s + "\"";
  };
  for (const auto& r : rows) {
    std::string hidden;
    for (std::size_t i = 0; i < r.cell.hidden.size(); ++i) {
      hidden += (i ? "x" : "") + std::to_string(r.cell.hidden[i]);
    }
    const auto& o = r.outcome;
    const bool has_run = o.trajectory.size() > 0;
    out << to_string(r.cell.kind) << "," << r.cell.name << "," << hidden << "," << o.horizon << ","
        << to_string(o.method) << "," << o.status << ","
        << (has_run ? format_double(o.metrics.steady_error) : "") << ","
        << (has_run ? format_double(o.metrics.max_solve_time) : "") << ","
        << (has_run ? format_double(o.metrics.mean_solve_time) : "") << ","
        << o.trajectory.size() << "," << o.trajectory.state_violations << ","
        << format_double(o.max_abs_u) << "," << format_double(r.network_rmse) << ","
        << r.network_hash << "," << quote(o.message) << "\n";
  }
  return out.str();
}

}  // namespace nnmpc

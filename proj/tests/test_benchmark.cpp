#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nnmpc/benchmark.hpp"
#include "nnmpc/text_io.hpp"
#include "test_util.hpp"

using namespace nnmpc;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

RunConfig small_training() {
  return config_from_json(json{{"hidden", {4}},
                               {"seed", 7},
                               {"train", {{"samples", 200}, {"epochs", 3}, {"batch", 32}}}});
}

}  // namespace

TEST_CASE("default configuration carries the pendulum example settings") {
  const RunConfig c;
  CHECK(c.Q[0] == 1e5);
  CHECK(c.Q[1] == 1e2);
  CHECK(c.R[0] == 1.0);
  CHECK(c.Phi[0] == 100.0);
  CHECK(c.R_s[0] == 1.0);
  CHECK(c.u_max == 3.0);
  CHECK(c.y_ref == doctest::Approx(M_PI / 5));
  CHECK(c.horizon == 1);
  CHECK(c.steps == 100);
  CHECK(c.target == TargetMethod::kExact);
}

TEST_CASE("config overlays keys and round trips through json") {
  const json doc = {{"y_ref", 0.25},
                    {"method", "elr"},
                    {"horizon", 3},
                    {"seed", 11},
                    {"Q", {1.0, 2.0}},
                    {"plant", {{"c", 0.0}}},
                    {"solver", {{"node_limit", 50}}},
                    {"bench", {{"widths", {10, 20}}, {"methods", {"lr"}}}}};
  const RunConfig c = config_from_json(doc);
  CHECK(c.y_ref == 0.25);
  CHECK(c.method == Method::kElr);
  CHECK(c.horizon == 3);
  CHECK(c.train.seed == 11);
  CHECK(c.Q[1] == 2.0);
  CHECK(c.plant.c == 0.0);
  CHECK(c.plant.g == RunConfig{}.plant.g);
  CHECK(c.node_limit == 50);
  CHECK(c.bench.widths == std::vector<int>{10, 20});
  CHECK(c.bench.methods == std::vector<Method>{Method::kLr});

  const json out = config_to_json(c);
  CHECK(config_to_json(config_from_json(out)) == out);
}

TEST_CASE("config rejects unknown keys and invalid values") {
  CHECK_THROWS_AS(config_from_json(json{{"horizn", 2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"plant", {{"mass", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"horizon", 0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"horizon", "two"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"method", "milp"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"R", {0.0}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"Q", {1.0}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"x_max", {1.0, 2.0, 3.0}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"hidden", {10, 0}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"bench", {{"methods", json::array()}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);

  const auto dir = fresh_dir("nnmpc_test_config");
  std::filesystem::create_directories(dir);
  write_text_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  write_text_file(dir / "good.json", R"({"steps": 7})");
  CHECK(load_config(dir / "good.json").steps == 7);
}

TEST_CASE("plant and design options follow the configuration") {
  RunConfig c = config_from_json(json{{"u_max", 2.0}, {"x_max", {1.0, 4.0}}, {"horizon", 2}});
  const PlantModel plant = make_plant(c);
  CHECK(plant.boxes.input.upper[0] == 2.0);
  CHECK(plant.boxes.input.lower[0] == -2.0);
  CHECK(plant.boxes.state.upper[1] == 4.0);
  const DesignOptions o = design_options(c);
  CHECK(o.Q(0, 0) == 1e5);
  CHECK(o.mpc.horizon == 2);
  CHECK(o.y_ref[0] == doctest::Approx(M_PI / 5));
  CHECK(network_shape({10, 20}) == std::vector<int>{3, 10, 20, 1});
}

TEST_CASE("bench cells cover the width, depth and horizon sweeps") {
  const RunConfig c;
  const auto width = bench_cells(c, BenchCase::kWidth);
  const auto depth = bench_cells(c, BenchCase::kDepth);
  const auto horizon = bench_cells(c, BenchCase::kHorizon);
  REQUIRE(width.size() == 5);
  REQUIRE(depth.size() == 4);
  REQUIRE(horizon.size() == 4);
  CHECK(width[2].name == "h50");
  CHECK(width[2].horizon == 1);
  CHECK(depth[1].name == "h10x10");
  CHECK(depth[3].hidden == std::vector<int>(5, 10));
  CHECK(horizon[0].name == "h50_N2");
  CHECK(horizon[3].horizon == 5);
  CHECK(horizon[3].hidden == std::vector<int>{50});
  CHECK(parse_bench_case(to_string(BenchCase::kDepth)) == BenchCase::kDepth);
  CHECK_THROWS_AS(parse_bench_case("size"), std::invalid_argument);
}

TEST_CASE("trained networks are cached by training settings") {
  const auto dir = fresh_dir("nnmpc_test_cache");
  const RunConfig c = small_training();
  const auto first = obtain_network(c, {4}, dir);
  CHECK(first.trained);
  CHECK(first.path.filename() == "h4_s7.json");
  CHECK(std::filesystem::exists(dir / "h4_s7.log.csv"));
  CHECK(first.hash.size() == 40);
  CHECK(std::isfinite(first.grid_rmse));

  const auto second = obtain_network(c, {4}, dir);
  CHECK_FALSE(second.trained);
  CHECK(second.hash == first.hash);

  RunConfig changed = c;
  changed.train.epochs = 4;
  CHECK(obtain_network(changed, {4}, dir).trained);
}

TEST_CASE("run_methods reports each method and target failures") {
  RunConfig c = config_from_json(json{{"y_ref", 0.1}, {"steps", 20}});
  const auto net = testing::pendulum_interpolant(9);
  const auto outcomes = run_methods(c, net, {Method::kMip, Method::kLr, Method::kElr}, 1);
  REQUIRE(outcomes.size() == 3);
  for (const auto& o : outcomes) {
    CHECK(o.ok());
    CHECK(o.trajectory.size() == 20);
    CHECK(o.max_abs_u <= 3.0 + 1e-6);
    CHECK(o.input_feasible);
  }
  CHECK(outcomes[1].method == Method::kLr);

  c.y_ref = M_PI / 5;
  const auto bad = run_methods(c, net, {Method::kMip}, 1);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].status == "target_infeasible");
  CHECK_FALSE(bad[0].message.empty());
}

TEST_CASE("bench table has one row per cell and method") {
  BenchRow row;
  row.cell = bench_cells(RunConfig{}, BenchCase::kWidth)[0];
  row.outcome.status = "ok";
  row.outcome.method = Method::kLr;
  row.network_hash = "abc";
  const std::string csv = bench_table_csv({row, row});
  CHECK(csv.rfind("case,cell,hidden,horizon,method,status,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("width,h10,10,1,lr,ok,") != std::string::npos);
}

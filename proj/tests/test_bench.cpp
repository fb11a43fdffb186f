/*
 Copyright 2026 The necc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "necc/bench.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "necc/linalg.hpp"

namespace necc {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("necc_bench_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Pendulum, SystemDefinition) {
  const auto sys = pendulum_system();
  EXPECT_EQ(sys.state_dim(), 2);
  EXPECT_EQ(sys.input_dim(), 1);
  Eigen::Matrix2d J;
  J << 0, 1, -1, 0;
  EXPECT_EQ(sys.J().constant(), Eigen::MatrixXd(J));
  EXPECT_EQ(sys.R().constant(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2)));
  EXPECT_EQ(sys.G().constant(), Eigen::MatrixXd(Eigen::Vector2d(0, 1)));
  EXPECT_EQ(sys.region().lower, Eigen::VectorXd(Eigen::Vector2d(-2, -2)));
  EXPECT_EQ(sys.region().upper, Eigen::VectorXd(Eigen::Vector2d(2, 2)));
  EXPECT_TRUE(validate_structure(sys, sys.region().grid(5)).passed);
  EXPECT_DOUBLE_EQ(output(sys, Eigen::Vector2d(1.3, -0.4))(0), -0.4);
  EXPECT_EQ(vector_field(sys, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1)), Eigen::Vector2d(0, 0));
}

TEST(IntegratorController, StructureAndOutput) {
  const auto Hc = std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Constant(1, 1, 3.0));
  const auto c = integrator_controller(Hc);
  EXPECT_EQ(c.state_dim(), 1);
  EXPECT_EQ(c.J().constant()(0, 0), 0.0);
  EXPECT_EQ(c.R().constant()(0, 0), 0.0);
  EXPECT_EQ(c.G().constant()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(output(c, Eigen::VectorXd::Constant(1, 0.5))(0), 1.5);  // dH_c/dxi
  const auto cl = interconnect(pendulum_system(), c);
  Eigen::Matrix3d expected;
  expected << 0, 1, 0, -1, 0, -1, 0, 1, 0;
  EXPECT_EQ(cl.J().constant(), Eigen::MatrixXd(expected));
  EXPECT_EQ(cl.R().constant(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3)));
}

TEST(MassSpringDamper, ValidatesAndDissipates) {
  const auto sys = mass_spring_damper_system();
  EXPECT_TRUE(validate_structure(sys, sys.region().grid(4)).passed);
  EXPECT_LT(passivity_residual(sys, Eigen::Vector2d(0.5, 1.0), Eigen::VectorXd::Zero(1)), 0.0);
}

TEST(Stationarity, ConstantDesignSatisfiesConditions) {
  const double q = M_PI / 4;
  const auto s = stationarity_residual(-std::sin(q), 1.0, -std::sin(q), 1.0, q);
  EXPECT_NEAR(s.r1, 0.0, 1e-15);
  EXPECT_NEAR(s.r2, 0.0, 1e-15);
  // Leading principal minors of [[cos q + 1, 0, -1], [0, 1, 0], [-1, 0, 2]].
  const double m1 = std::cos(q) + 1.0;
  const double m2 = m1 * 1.0;
  const double m3 = 1.0 * (m1 * 2.0 - 1.0);
  EXPECT_GT(m1, 0.0);
  EXPECT_GT(m2, 0.0);
  EXPECT_GT(m3, 0.0);
  EXPECT_NEAR(s.M.determinant(), m3, 1e-12);
  EXPECT_GT(s.min_eig, 0.0);
}

TEST(Stationarity, ZeroDesignLeavesGravity) {
  const auto s = stationarity_residual(0.0, 0.0, 0.0, 0.0, M_PI / 4);
  EXPECT_NEAR(s.r1, 0.70711, 5e-6);
  EXPECT_EQ(s.r2, 0.0);
}

TEST(Stationarity, CompositionOverloadUsesUnnormalizedArgument) {
  // K, beta identity (linear 1-1-1 nets) give C = (q - xi)/sqrt(2), so K_tilde'(s) = 1/sqrt(2).
  ExperimentConfig c;
  c.casimir_widths = {1, 1, 1};
  c.controller_widths = {1, 1, 1};
  c.activation = Activation::Linear;
  Experiment ex = build_experiment(c);
  auto set = [&](const std::string& name, std::vector<double> v) {
    const auto& seg = ex.params.segment(name);
    std::copy(v.begin(), v.end(), ex.params.values().begin() + static_cast<std::ptrdiff_t>(seg.offset));
  };
  set("K", {1, 0, 1, 0});
  set("H_c", {2, 0, 1, 0});  // H_c(xi) = 2 xi
  const double q = M_PI / 4;
  const auto s = stationarity_residual(ex.lyapunov(), ex.params.values(), -0.3, q);
  const double sign = ex.lyapunov().casimir_value<double, double>(ex.params.values(), ad::VecX<double>(Eigen::Vector3d(1, 0, 0))) > 0 ? 1.0 : -1.0;
  EXPECT_NEAR(s.r1, std::sin(q) + sign / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s.r2, -sign / std::sqrt(2.0) + 2.0, 1e-14);
  EXPECT_NEAR(s.M(1, 1), 1.0, 0.0);
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const auto j = config_to_json(c);
  EXPECT_EQ(j.at("schema_version"), kConfigSchemaVersion);
  const auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
}

TEST(Config, CustomRoundTrip) {
  ExperimentConfig c;
  c.system = "mass_spring_damper";
  c.target = Eigen::Vector2d(0.25, 0.0);
  c.loss = LossKind::Grid;
  c.grid_mean = true;
  c.phi_widths = {2, 8, 1};
  c.casimir_inner_widths = {1, 4, 1};
  c.roa = RoaConfig{2.0, 30, -1.0, 1.0};
  c.optimizer.early_stop = 1e-3;
  c.xi_init = {0.1};
  c.sweep = {0.3};
  c.D = Eigen::MatrixXd::Constant(1, 1, 2.5);
  c.seed = 12345678901234ULL;
  const auto j = config_to_json(c);
  const auto again = config_to_json(config_from_json(j));
  EXPECT_EQ(again, j);
  EXPECT_EQ(config_from_json(j).seed, 12345678901234ULL);
}

TEST(Config, PartialFileUsesDefaults) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"loss": {"margin": 0.25}, "seed": 3})"));
  EXPECT_EQ(c.margin, 0.25);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.optimizer.epochs, 2000);
  EXPECT_EQ(c.casimir_widths, (std::vector<int>{1, 64, 1}));
}

TEST(Config, RejectsUnknownAndOutOfRangeFields) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sed": 1})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"loss": {"margni": 1}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"loss": {"margin": 0}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"simulation": {"dt": -0.1}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"optimizer": {"epochs": 0}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"schema_version": 99})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"loss": {"kind": "mystery"}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"seed": "zero"})")), ConfigError);
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
  try {
    parse_json_text("{\n  \"seed\": 1,\n  oops\n}", "bad.json");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.json:3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("malformed JSON"), std::string::npos) << msg;
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"pendulum.json", "pendulum_grid.json", "mass_spring_damper.json"}) {
    const auto c = load_config(fs::path(NECC_SOURCE_DIR) / "configs" / name);
    EXPECT_NO_THROW(c.validate()) << name;
    EXPECT_NO_THROW(build_experiment(c)) << name;
  }
  const auto grid = load_config(fs::path(NECC_SOURCE_DIR) / "configs" / "pendulum_grid.json");
  EXPECT_EQ(grid.loss, LossKind::Grid);
  EXPECT_EQ(grid.optimizer.epochs, 5000);
}

TEST(SystemJson, InlineDescription) {
  const auto sys = system_from_json(nlohmann::json::parse(R"({
    "J": [[0, 1], [-1, 0]], "R": [[0, 0], [0, 0.5]], "G": [[0], [1]],
    "hamiltonian": {"type": "quadratic", "Q": [[1, 0], [0, 1]]},
    "region": {"lower": [-1, -1], "upper": [1, 1]}})"));
  EXPECT_EQ(sys.state_dim(), 2);
  EXPECT_TRUE(validate_structure(sys, sys.region().grid(3)).passed);
  const Eigen::VectorXd f = vector_field(sys, Eigen::Vector2d(1, 1), Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(f(0), 1.0, 1e-15);
  EXPECT_NEAR(f(1), -1.5, 1e-15);
  EXPECT_THROW(system_from_json("double_pendulum"), ConfigError);
  EXPECT_THROW(system_from_json(nlohmann::json::parse(R"({"J": [[0, 1]], "R": [[0]], "G": [[1]]})")), std::exception);
}

TEST(Experiment, ParameterLayout) {
  const Experiment ex = build_experiment(ExperimentConfig{});
  const auto& segs = ex.params.segments();
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].name, "H_c");
  EXPECT_EQ(segs[0].length, 97u);
  EXPECT_EQ(segs[1].name, "K");
  EXPECT_EQ(segs[1].length, 193u);
  EXPECT_EQ(segs[2].name, "xi_star");
  EXPECT_EQ(ex.params.values("xi_star")[0], 0.0);
  EXPECT_NEAR(ex.problem.x_star(0), M_PI / 4, 1e-15);
  EXPECT_EQ(ex.problem.x_star(1), 0.0);
  EXPECT_EQ(ex.problem.margin, 0.5);
}

TEST(Experiment, GridModeUsesFreeCasimirNetwork) {
  ExperimentConfig c;
  c.loss = LossKind::Grid;
  const Experiment ex = build_experiment(c);
  EXPECT_TRUE(ex.params.has("C"));
  EXPECT_FALSE(ex.params.has("K"));
  EXPECT_EQ(ex.problem.grid.size(), 729u);
  EXPECT_EQ(ex.problem.margin, 0.0);
}

TEST(Experiment, InitialStatesAreSeededAndInBox) {
  ExperimentConfig c;
  const auto a = initial_states(c, 3), b = initial_states(c, 3);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_LE(a[i].cwiseAbs().maxCoeff(), 2.0);
  }
  c.seed = 1;
  EXPECT_NE(initial_states(c, 3)[0], a[0]);
}

class TrainedPendulum : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ex_ = new Experiment(build_experiment(ExperimentConfig{}));
    report_ = new TrainReport(adam_train(ex_->problem, ex_->params));
  }
  static void TearDownTestSuite() {
    delete ex_;
    delete report_;
  }
  static Experiment* ex_;
  static TrainReport* report_;
};
Experiment* TrainedPendulum::ex_ = nullptr;
TrainReport* TrainedPendulum::report_ = nullptr;

TEST_F(TrainedPendulum, StationarityResidualsWithinLoss) {
  const double xi = report_->xi_star(0);
  const auto s = stationarity_residual(ex_->lyapunov(), ex_->params.values(), xi, M_PI / 4);
  EXPECT_LE(report_->epsilon, 0.02);
  EXPECT_LE(std::abs(s.r1), report_->epsilon);
  EXPECT_LE(std::abs(s.r2), report_->epsilon);
  EXPECT_GT(s.min_eig, 0.0);
  // M is the Hessian of V at z* when V = H + H_c + C.
  const Eigen::MatrixXd H = lyapunov_hessian(ex_->lyapunov(), ex_->params.values(), report_->z_star);
  EXPECT_LE((H - Eigen::MatrixXd(s.M)).norm(), 1e-10);
}

TEST_F(TrainedPendulum, MinimumNearTargetAndBoundHolds) {
  const Eigen::VectorXd zbar = locate_minimum(*ex_);
  EXPECT_NEAR(zbar(0), M_PI / 4, 0.05);
  EXPECT_NEAR(zbar(1), 0.0, 0.05);
  EXPECT_LE(lyapunov_grad(ex_->lyapunov(), ex_->params.values(), zbar).norm(), 1e-10);
  EXPECT_GT(linalg::min_eigenvalue(lyapunov_hessian(ex_->lyapunov(), ex_->params.values(), zbar)), 0.0);
  EXPECT_TRUE(verify_bound(*report_, zbar).passed);
  const ControlledLoop loop{&ex_->closed_loop(), &ex_->lyapunov(), ex_->params.values(), ex_->gains()};
  EXPECT_LE(loop.field(zbar).norm(), 1e-6);
}

TEST_F(TrainedPendulum, SurfaceExportShapeAndMinimum) {
  const auto s = sample_surface(*ex_, 101, 101, -2.0, 2.0);
  ASSERT_EQ(s.V.size(), 101u * 101u);
  EXPECT_EQ(s.q.front(), -2.0);
  EXPECT_EQ(s.q.back(), 2.0);
  EXPECT_EQ(s.p.front(), -2.0);
  EXPECT_EQ(s.p.back(), 2.0);
  EXPECT_NEAR(s.q[1] - s.q[0], 0.04, 1e-15);
  const auto it = std::min_element(s.V.begin(), s.V.end());
  const auto k = static_cast<std::size_t>(it - s.V.begin());
  EXPECT_LE(std::hypot(s.q[k] - M_PI / 4, s.p[k]), 0.05);
  const auto dir = scratch_dir("surface");
  write_surface_csv(dir / "s.csv", sample_surface(*ex_, 7, 5, -1.0, 1.0));
  std::ifstream in(dir / "s.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "q,p,V");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 35);
  const auto j = surface_to_json(sample_surface(*ex_, 7, 5, -1.0, 1.0));
  EXPECT_EQ(j.at("width"), 7);
  EXPECT_EQ(j.at("height"), 5);
}

TEST_F(TrainedPendulum, ModelRoundTripIsBitExact) {
  const auto dir = scratch_dir("model");
  save_model(dir, *ex_);
  EXPECT_TRUE(fs::exists(dir / "H_c.json"));
  EXPECT_TRUE(fs::exists(dir / "K.json"));
  const Experiment back = load_model(dir / "model.json");
  EXPECT_EQ(std::vector<double>(back.params.values().begin(), back.params.values().end()),
            std::vector<double>(ex_->params.values().begin(), ex_->params.values().end()));
  Xoshiro256 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d z(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    EXPECT_EQ(lyapunov_value(back.lyapunov(), back.params.values(), z),
              lyapunov_value(ex_->lyapunov(), ex_->params.values(), z));
  }
  EXPECT_THROW(load_model(dir / "missing.json"), std::exception);
}

TEST(Sweep, CsvColumns) {
  const std::vector<SweepRow> rows{{0.5, 0.01, 0.0204, 0.01, true, ""}, {0.1, 0.2, std::nullopt, std::nullopt, false, "a <= epsilon"}};
  const auto dir = scratch_dir("sweep");
  write_sweep_csv(dir / "sweep.csv", rows);
  std::ifstream in(dir / "sweep.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "a,epsilon,bound,error,pass");
  EXPECT_EQ(first.substr(first.rfind(',') + 1), "true");
  EXPECT_EQ(second.substr(second.rfind(',') + 1), "false");
  EXPECT_EQ(sweep_to_json(rows).size(), 2u);
}

TEST(RunExperiment, WritesTheArtifactBundle) {
  ExperimentConfig c;
  c.optimizer.epochs = 300;
  c.simulation.trajectories = 2;
  c.simulation.T = 2.0;
  c.sweep = {0.5};
  c.surface.width = 11;
  c.surface.height = 11;
  const auto dir = scratch_dir("experiment");
  c.output_dir = dir.string();
  const auto res = run_paper_experiment(c);
  for (const char* f : {"train_report.json", "loss.csv", "model/model.json", "trajectories/trajectory_00.csv",
                        "trajectories/trajectory_01.csv", "surface.csv", "sweep.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(res.stabilization.size(), 2u);
  EXPECT_EQ(res.sweep.size(), 1u);
  EXPECT_EQ(res.report.history.size(), 300u);
}

}  // namespace
}  // namespace necc

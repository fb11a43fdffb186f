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

#ifndef NECC_BENCH_HPP
#define NECC_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "necc/phs.hpp"
#include "necc/sim.hpp"
#include "necc/train.hpp"

namespace necc {

// Builtin systems ------------------------------------------------------------

/// q' = p, p' = -sin q + u, y = p; H = p^2/2 + 1 - cos q on [-2, 2]^2.
PortHamiltonianSystem pendulum_system();

/// Linear mass-spring-damper (m = 1, k = 1, c = 0.5), H = (q^2 + p^2)/2 on [-2, 2]^2.
/// Smoke-test system with closed-form behavior; not part of the reference experiment.
PortHamiltonianSystem mass_spring_damper_system();

/// xi' = u_c, y_c = dH_c/dxi: J_c = 0, R_c = 0, G_c = I (one state per port), on [-2, 2].
/// `hamiltonian` may be null while H_c is still being learned.
PortHamiltonianSystem integrator_controller(std::shared_ptr<const Hamiltonian> hamiltonian = nullptr, int ports = 1);

struct StationarityResidual {
  double r1 = 0.0;  ///< sin q* + K'(q* - xi*)
  double r2 = 0.0;  ///< -K'(q* - xi*) + H_c'(xi*)
  Eigen::Matrix3d M;
  double min_eig = 0.0;  ///< lambda_min(M)
};

/// The classical pendulum design conditions with K' and K'' evaluated in the
/// unnormalized argument s = q - xi.
StationarityResidual stationarity_residual(double dK, double d2K, double dHc, double d2Hc, double q_star);

/// Same, reading K from C(q, p, xi) = K_tilde(q - xi) of a trained pendulum
/// composition (the kernel basis (1, 0, -1)/sqrt(2) scales the stored input).
StationarityResidual stationarity_residual(const LyapunovComposition& L, std::span<const double> theta,
                                           double xi_star, double q_star);

// Configuration --------------------------------------------------------------

inline constexpr int kConfigSchemaVersion = 1;

struct RoaConfig {
  double gamma = 1.0;
  int samples = 100;
  double lower = -2.0;
  double upper = 2.0;
};

struct SimulationConfig {
  double dt = 0.01;
  double T = 50.0;
  int trajectories = 10;
  double lower = -2.0;  ///< initial states uniform in [lower, upper]^N
  double upper = 2.0;
  double tol = 0.05;
  double tail_fraction = 0.1;
};

struct SurfaceConfig {
  int width = 101;  ///< points along q
  int height = 101; ///< points along p
  double lower = -2.0;
  double upper = 2.0;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  /// Builtin name ("pendulum", "mass_spring_damper") or an inline description.
  nlohmann::json system = "pendulum";
  Eigen::VectorXd target;  ///< x*; empty means the builtin default
  LossKind loss = LossKind::Parameterized;
  double margin = 0.5;
  double grid_margin = 0.0;
  int grid_points = 9;
  double grid_lower = -2.0;
  double grid_upper = 2.0;
  bool grid_mean = false;
  std::vector<int> controller_widths{1, 32, 1};
  std::vector<int> casimir_widths{1, 64, 1};
  std::vector<int> casimir_inner_widths{};  ///< empty: identity inner maps
  std::vector<int> phi_widths{};            ///< empty: V = H + H_c + C
  std::vector<int> grid_casimir_widths{3, 32, 1};
  Activation activation = Activation::Tanh;
  Init init = Init::TorchUniform;
  std::uint64_t seed = 0;
  std::vector<double> xi_init;  ///< empty means zeros
  AdamSettings optimizer;
  std::optional<RoaConfig> roa;
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(1, 1, 5.0);
  Eigen::MatrixXd D_c = Eigen::MatrixXd::Constant(1, 1, 6.0);
  SimulationConfig simulation;
  std::vector<double> sweep{0.1, 0.25, 0.5, 0.75, 1.0};
  SurfaceConfig surface;
  std::string output_dir = "out";

  /// Range checks; throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& c);
/// Throws ConfigError on unknown or out-of-range fields.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Reads and parses a config file; syntax errors report line and column.
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

/// PHS from a builtin name or {"J", "R", "G", "hamiltonian", "region"}.
PortHamiltonianSystem system_from_json(const nlohmann::json& j);

// Experiment -----------------------------------------------------------------

/// Everything needed to train and simulate one configuration.
struct Experiment {
  ExperimentConfig config;
  ParamVector params;
  TrainProblem problem;

  const ClosedLoopSystem& closed_loop() const { return problem.closed_loop; }
  const LyapunovComposition& lyapunov() const { return problem.lyapunov; }
  DampingGains gains() const { return {config.D, config.D_c}; }
};

Experiment build_experiment(const ExperimentConfig& config);

/// Writes the trained networks (one file each) and a bundle referencing them.
void save_model(const std::filesystem::path& dir, const Experiment& ex);
/// Rebuilds the experiment from a bundle and loads the trained parameters.
Experiment load_model(const std::filesystem::path& bundle);

struct SweepRow {
  double a = 0.0;
  double epsilon = 0.0;
  std::optional<double> bound;
  std::optional<double> error;
  bool passed = false;
  std::string note;
};

/// Trains a copy of `base` with margin a and checks the bound at its minimum.
SweepRow run_sweep_point(const ExperimentConfig& base, double a);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

/// V(q, p, xi*) on a width x height grid over [lower, upper]^2, q varying fastest.
struct SurfaceGrid {
  int width = 0;
  int height = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> q, p, V;
};

SurfaceGrid sample_surface(const Experiment& ex, int width, int height, double lower, double upper);
void write_surface_csv(const std::filesystem::path& path, const SurfaceGrid& s);
nlohmann::json surface_to_json(const SurfaceGrid& s);

struct ExperimentResult {
  TrainReport report;
  Eigen::VectorXd z_bar;
  BoundCheck bound;
  std::vector<StabilizationReport> stabilization;
  std::vector<DecreaseReport> decrease;
  std::vector<SweepRow> sweep;
  bool passed = false;
};

struct ExperimentOptions {
  bool simulate = true;
  bool sweep = true;
  bool surface = true;
};

/// Train, locate the minimum, verify the bound, simulate, sweep a, export data.
ExperimentResult run_paper_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

/// Closed-loop minimum for a trained experiment, searched from z*.
Eigen::VectorXd locate_minimum(const Experiment& ex);

/// Seeded initial states uniform in the simulation box.
std::vector<Eigen::VectorXd> initial_states(const ExperimentConfig& config, int dimension);

// CLI ------------------------------------------------------------------------

enum ExitCode : int { kExitOk = 0, kExitVerification = 1, kExitConfig = 2, kExitNumeric = 3 };

int cli_main(int argc, char** argv);

}  // namespace necc

#endif  // NECC_BENCH_HPP

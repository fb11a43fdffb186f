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

#ifndef NECC_SIM_HPP
#define NECC_SIM_HPP

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "necc/phs.hpp"
#include "necc/train.hpp"

namespace necc {

/// Symmetric positive-definite damping gains for the plant and controller ports.
struct DampingGains {
  Eigen::MatrixXd D;
  Eigen::MatrixXd D_c;

  /// Throws StructuralError unless both are square, symmetric to 1e-9 and positive definite.
  DampingGains(Eigen::MatrixXd D, Eigen::MatrixXd D_c);
  static DampingGains scalar(double d, double d_c);
};

struct DampingInputs {
  Eigen::VectorXd v;    ///< -D G^T dV/dx
  Eigen::VectorXd v_c;  ///< -D_c G_c^T dV/dxi
};

/// Closed loop, Lyapunov function with its parameters, and gains.
struct ControlledLoop {
  const ClosedLoopSystem* closed_loop;
  const LyapunovComposition* lyapunov;
  std::span<const double> theta;
  DampingGains gains;

  DampingInputs inputs(const Eigen::VectorXd& z) const;
  Eigen::VectorXd field(const Eigen::VectorXd& z) const;
};

/// (J_cl - R_cl) d(H + H_c)/dz + blockdiag(G, G_c) (v, v_c).
Eigen::VectorXd controlled_field(const ClosedLoopSystem& cl, const LyapunovComposition& L,
                                 std::span<const double> theta, const DampingGains& gains, const Eigen::VectorXd& z);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> lyapunov;   ///< V(z(t)); empty when not observed
  std::vector<double> energy;     ///< (H + H_c)(z(t))
  std::vector<Eigen::VectorXd> v;
  std::vector<Eigen::VectorXd> v_c;

  std::size_t size() const { return times.size(); }
};

/// Optional per-sample quantities recorded alongside the state.
struct Observers {
  std::function<double(const Eigen::VectorXd&)> lyapunov;
  std::function<double(const Eigen::VectorXd&)> energy;
  std::function<DampingInputs(const Eigen::VectorXd&)> inputs;

  static Observers of(const ControlledLoop& loop);
};

class SimulationAborted : public NumericError {
 public:
  SimulationAborted(Trajectory partial, const std::string& detail)
      : NumericError(detail), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Classic RK4 with ceil(T/dt) fixed steps; throws SimulationAborted with the
/// samples so far when the state becomes non-finite.
Trajectory rk4_integrate(const VectorField& f, const Eigen::VectorXd& z0, double dt, double T,
                         const Observers& observers = {});

struct StabilizationReport {
  bool passed = false;
  double max_distance = 0.0;  ///< over the tail samples
  std::size_t tail_samples = 0;
};

StabilizationReport verify_stabilization(const Trajectory& traj, const Eigen::VectorXd& z_bar, double tol = 0.05,
                                         double tail_fraction = 0.1);

struct DecreaseReport {
  bool passed = false;
  double worst_excess = 0.0;  ///< max of V(t_{k+1}) - V(t_k) - 1e-8 (1 + |V(t_k)|)
  std::size_t worst_index = 0;
};

/// Pass iff V(t_{k+1}) <= V(t_k) + 1e-8 (1 + |V(t_k)|) for all k.
DecreaseReport verify_lyapunov_decrease(const Trajectory& traj);

struct BoundCheck {
  double error = 0.0;  ///< |z_bar - z*|
  double bound = 0.0;  ///< epsilon / (a - epsilon)
  bool passed = false; ///< error <= 1.1 bound
};

BoundCheck verify_bound(const TrainReport& report, const Eigen::VectorXd& z_bar);
BoundCheck verify_bound(double epsilon, double a, const Eigen::VectorXd& z_star, const Eigen::VectorXd& z_bar);

/// Columns t, z_1..z_N, V, H_total, v, v_c (indexed v_1.. when the port has several channels).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace necc

#endif  // NECC_SIM_HPP

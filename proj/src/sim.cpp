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

#include "necc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "necc/linalg.hpp"

namespace necc {

namespace {

void check_gain(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) throw StructuralError(std::string(name) + " must be square");
  if (linalg::asymmetry(M) > 1e-9) throw StructuralError(std::string(name) + " must be symmetric");
  if (!(linalg::min_eigenvalue(M) > 0.0)) throw StructuralError(std::string(name) + " must be positive definite");
}

}  // namespace

DampingGains::DampingGains(Eigen::MatrixXd D_, Eigen::MatrixXd D_c_) : D(std::move(D_)), D_c(std::move(D_c_)) {
  check_gain(D, "D");
  check_gain(D_c, "D_c");
}

DampingGains DampingGains::scalar(double d, double d_c) {
  return {Eigen::MatrixXd::Constant(1, 1, d), Eigen::MatrixXd::Constant(1, 1, d_c)};
}

DampingInputs ControlledLoop::inputs(const Eigen::VectorXd& z) const {
  const auto& cl = *closed_loop;
  const int n = cl.plant_dim();
  const int nc = cl.controller_dim();
  if (gains.D.rows() != cl.port_dim() || gains.D_c.rows() != cl.port_dim()) {
    throw StructuralError("controlled_field: gain size does not match the port dimension");
  }
  const Eigen::VectorXd dV = lyapunov_grad(*lyapunov, theta, z);
  const Eigen::VectorXd x = z.head(n);
  const Eigen::VectorXd xi = z.tail(nc);
  return {-gains.D * (cl.plant().G()(x).transpose() * dV.head(n)),
          -gains.D_c * (cl.controller().G()(xi).transpose() * dV.tail(nc))};
}

Eigen::VectorXd ControlledLoop::field(const Eigen::VectorXd& z) const {
  const auto& cl = *closed_loop;
  if (z.size() != cl.state_dim()) throw StructuralError("controlled_field: state dimension mismatch");
  const DampingInputs in = inputs(z);
  Eigen::VectorXd u(in.v.size() + in.v_c.size());
  u << in.v, in.v_c;
  const Eigen::VectorXd dH = closed_loop_energy_grad(*lyapunov, theta, z);
  return (cl.J()(z) - cl.R()(z)) * dH + cl.input_matrix(z) * u;
}

Eigen::VectorXd controlled_field(const ClosedLoopSystem& cl, const LyapunovComposition& L,
                                 std::span<const double> theta, const DampingGains& gains, const Eigen::VectorXd& z) {
  return ControlledLoop{&cl, &L, theta, gains}.field(z);
}

Observers Observers::of(const ControlledLoop& loop) {
  return {[loop](const Eigen::VectorXd& z) { return lyapunov_value(*loop.lyapunov, loop.theta, z); },
          [loop](const Eigen::VectorXd& z) { return closed_loop_energy(*loop.lyapunov, loop.theta, z); },
          [loop](const Eigen::VectorXd& z) { return loop.inputs(z); }};
}

namespace {

void record(Trajectory& tr, double t, const Eigen::VectorXd& z, const Observers& obs) {
  tr.times.push_back(t);
  tr.states.push_back(z);
  if (obs.lyapunov) tr.lyapunov.push_back(obs.lyapunov(z));
  if (obs.energy) tr.energy.push_back(obs.energy(z));
  if (obs.inputs) {
    DampingInputs in = obs.inputs(z);
    tr.v.push_back(std::move(in.v));
    tr.v_c.push_back(std::move(in.v_c));
  }
}

}  // namespace

Trajectory rk4_integrate(const VectorField& f, const Eigen::VectorXd& z0, double dt, double T,
                         const Observers& observers) {
  if (!(dt > 0.0) || !(T >= dt)) throw StructuralError("rk4_integrate: need dt > 0 and T >= dt");
  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(steps + 1));
  tr.states.reserve(static_cast<std::size_t>(steps + 1));
  Eigen::VectorXd z = z0;
  if (!z.allFinite()) throw SimulationAborted(tr, "rk4_integrate: initial state is not finite");
  record(tr, 0.0, z, observers);
  for (long k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = f(z);
    const Eigen::VectorXd k2 = f(z + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(z + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(z + dt * k3);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t = static_cast<double>(k + 1) * dt;
    if (!z.allFinite()) {
      throw SimulationAborted(std::move(tr), "rk4_integrate: state became non-finite at t = " + std::to_string(t));
    }
    record(tr, t, z, observers);
  }
  return tr;
}

StabilizationReport verify_stabilization(const Trajectory& traj, const Eigen::VectorXd& z_bar, double tol,
                                         double tail_fraction) {
  if (traj.size() == 0) throw StructuralError("verify_stabilization: empty trajectory");
  StabilizationReport rep;
  const auto n = traj.size();
  rep.tail_samples = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))), 1, n);
  for (std::size_t k = n - rep.tail_samples; k < n; ++k) {
    rep.max_distance = std::max(rep.max_distance, (traj.states[k] - z_bar).norm());
  }
  rep.passed = rep.max_distance <= tol;
  return rep;
}

DecreaseReport verify_lyapunov_decrease(const Trajectory& traj) {
  if (traj.lyapunov.size() != traj.size()) throw StructuralError("verify_lyapunov_decrease: V was not recorded");
  DecreaseReport rep;
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < traj.lyapunov.size(); ++k) {
    const double vk = traj.lyapunov[k];
    const double excess = traj.lyapunov[k + 1] - vk - 1e-8 * (1.0 + std::abs(vk));
    if (excess > rep.worst_excess) {
      rep.worst_excess = excess;
      rep.worst_index = k;
    }
  }
  rep.passed = rep.worst_excess <= 0.0;
  return rep;
}

BoundCheck verify_bound(double epsilon, double a, const Eigen::VectorXd& z_star, const Eigen::VectorXd& z_bar) {
  if (z_star.size() != z_bar.size()) throw StructuralError("verify_bound: dimension mismatch");
  BoundCheck c;
  c.bound = error_bound(epsilon, a);
  c.error = (z_bar - z_star).norm();
  c.passed = c.error <= 1.1 * c.bound;
  return c;
}

BoundCheck verify_bound(const TrainReport& report, const Eigen::VectorXd& z_bar) {
  return verify_bound(report.epsilon, report.margin, report.z_star, z_bar);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Eigen::Index N = traj.states.empty() ? 0 : traj.states.front().size();
  const Eigen::Index m = traj.v.empty() ? 0 : traj.v.front().size();
  const Eigen::Index mc = traj.v_c.empty() ? 0 : traj.v_c.front().size();
  out << 't';
  for (Eigen::Index i = 0; i < N; ++i) out << ",z_" << i + 1;
  out << ",V,H_total";
  auto port_header = [&](const char* name, Eigen::Index width) {
    if (width <= 1) {
      out << ',' << name;
    } else {
      for (Eigen::Index i = 0; i < width; ++i) out << ',' << name << '_' << i + 1;
    }
  };
  port_header("v", std::max<Eigen::Index>(m, 1));
  port_header("v_c", std::max<Eigen::Index>(mc, 1));
  out << '\n';
  auto cell = [&](const std::vector<double>& col, std::size_t k) {
    out << ',';
    if (k < col.size()) out << format_double(col[k]);
  };
  auto port_cells = [&](const std::vector<Eigen::VectorXd>& col, std::size_t k, Eigen::Index width) {
    for (Eigen::Index i = 0; i < std::max<Eigen::Index>(width, 1); ++i) {
      out << ',';
      if (k < col.size()) out << format_double(col[k](i));
    }
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < N; ++i) out << ',' << format_double(traj.states[k](i));
    cell(traj.lyapunov, k);
    cell(traj.energy, k);
    port_cells(traj.v, k, m);
    port_cells(traj.v_c, k, mc);
    out << '\n';
  }
}

}  // namespace necc

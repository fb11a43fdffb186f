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

#include "necc/phs.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "necc/bench.hpp"
#include "necc/sim.hpp"

namespace necc {
namespace {

PortHamiltonianSystem scalar_lossless(double J = 0.0) {
  return {Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, J)), Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1)),
          Eigen::MatrixXd(Eigen::MatrixXd::Ones(1, 1)),
          std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Identity(1, 1))};
}

// H = x_1 + x_2, gradient (1, 1) everywhere.
class LinearEnergy final : public HamiltonianBase<LinearEnergy> {
 public:
  int dimension() const override { return 2; }
  template <class S>
  S evaluate(const ad::VecX<S>& x) const {
    return x(0) + x(1);
  }
};

std::vector<Eigen::VectorXd> random_states(const Box& box, int count, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) out.push_back(box.sample(rng));
  return out;
}

TEST(ValidateStructure, PendulumPasses) {
  const auto sys = pendulum_system();
  const auto rep = validate_structure(sys, random_states(sys.region(), 100, 1));
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.max_skewness, 0.0);
  EXPECT_GE(rep.min_damping_eigenvalue, 0.0);
  EXPECT_DOUBLE_EQ(rep.min_input_singular_value, 1.0);
}

TEST(ValidateStructure, NegativeDampingFails) {
  const auto base = pendulum_system();
  const PortHamiltonianSystem sys(base.J(), Eigen::MatrixXd(-Eigen::MatrixXd::Identity(2, 2)), base.G(),
                                  base.hamiltonian_ptr(), base.region());
  const auto rep = validate_structure(sys, random_states(base.region(), 10, 2));
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.min_damping_eigenvalue, -1.0, 1e-12);
  ASSERT_EQ(rep.findings.size(), 1u);
  EXPECT_NE(rep.findings[0].find("negative eigenvalue"), std::string::npos);
}

TEST(ValidateStructure, IdentityInterconnectionFailsSkewness) {
  const auto base = pendulum_system();
  const PortHamiltonianSystem sys(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), base.R(), base.G(),
                                  base.hamiltonian_ptr(), base.region());
  const auto rep = validate_structure(sys, random_states(base.region(), 10, 3));
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.max_skewness, 1.0);
  EXPECT_NE(rep.findings[0].find("skew"), std::string::npos);
}

TEST(ValidateStructure, StateDependentMatricesCheckedPointwise) {
  // J(x) skew at every x except where x_0 > 1.
  StateMatrix J(2, 2, [](const Eigen::VectorXd& x) {
    Eigen::Matrix2d m;
    m << 0, 1, (x(0) > 1.0 ? 0.0 : -1.0), 0;
    return Eigen::MatrixXd(m);
  });
  const PortHamiltonianSystem sys(J, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2)),
                                  Eigen::MatrixXd(Eigen::Vector2d(0, 1)), std::make_shared<PendulumHamiltonian>());
  EXPECT_TRUE(validate_structure(sys, {Eigen::Vector2d(0.5, 0)}).passed);
  EXPECT_FALSE(validate_structure(sys, {Eigen::Vector2d(0.5, 0), Eigen::Vector2d(1.5, 0)}).passed);
}

TEST(ValidateStructure, RankDeficientInputFails) {
  const auto base = pendulum_system();
  const PortHamiltonianSystem sys(base.J(), base.R(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 1)),
                                  base.hamiltonian_ptr());
  EXPECT_FALSE(validate_structure(sys, {Eigen::Vector2d(0, 0)}).passed);
}

TEST(VectorField, PendulumExamples) {
  const auto sys = pendulum_system();
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(1);
  EXPECT_EQ(vector_field(sys, Eigen::Vector2d(0, 0), u0), Eigen::Vector2d(0, 0));
  const Eigen::VectorXd f1 = vector_field(sys, Eigen::Vector2d(M_PI / 2, 0), u0);
  EXPECT_NEAR(f1(0), 0.0, 1e-15);
  EXPECT_NEAR(f1(1), -1.0, 1e-15);
  const Eigen::VectorXd f2 = vector_field(sys, Eigen::Vector2d(M_PI / 4, 1), Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(f2(0), 1.0, 1e-15);
  EXPECT_NEAR(f2(1), 2.0 - std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(f2(1), 1.29289, 5e-6);
}

TEST(VectorField, DimensionMismatchThrows) {
  const auto sys = pendulum_system();
  EXPECT_THROW(vector_field(sys, Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(1)), StructuralError);
  EXPECT_THROW(vector_field(sys, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(2)), StructuralError);
  EXPECT_THROW(output(sys, Eigen::VectorXd::Zero(1)), StructuralError);
}

TEST(Output, PendulumIsMomentum) {
  const auto sys = pendulum_system();
  EXPECT_DOUBLE_EQ(output(sys, Eigen::Vector2d(0.3, 0.7))(0), 0.7);
  EXPECT_EQ(output(sys, Eigen::Vector2d(0, 0))(0), 0.0);
  const PortHamiltonianSystem no_input(sys.J(), sys.R(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 1)),
                                       sys.hamiltonian_ptr());
  EXPECT_EQ(output(no_input, Eigen::Vector2d(1.1, -0.4)), Eigen::VectorXd::Zero(1));
}

TEST(Passivity, LosslessIsZero) {
  const auto sys = pendulum_system();
  Xoshiro256 rng(5);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Vector2d x(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, rng.uniform(-3, 3));
    EXPECT_NEAR(passivity_residual(sys, x, u), 0.0, 1e-12);
  }
}

TEST(Passivity, UnitDampingWithUnitGradient) {
  const PortHamiltonianSystem sys(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2)),
                                  Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)),
                                  Eigen::MatrixXd(Eigen::Vector2d(0, 1)), std::make_shared<LinearEnergy>());
  EXPECT_DOUBLE_EQ(passivity_residual(sys, Eigen::Vector2d(0.2, 0.9), Eigen::VectorXd::Constant(1, 4.0)), -2.0);
}

TEST(Interconnect, PendulumWithIntegrator) {
  const auto cl = interconnect(pendulum_system(), integrator_controller());
  Eigen::Matrix3d expected;
  expected << 0, 1, 0, -1, 0, -1, 0, 1, 0;
  EXPECT_EQ(cl.J().constant(), Eigen::MatrixXd(expected));
  EXPECT_EQ(cl.R().constant(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3)));
  EXPECT_EQ(cl.state_dim(), 3);
}

TEST(Interconnect, TwoScalarLosslessSystems) {
  const auto cl = interconnect(scalar_lossless(), scalar_lossless());
  Eigen::Matrix2d expected;
  expected << 0, -1, 1, 0;
  EXPECT_EQ(cl.J().constant(), Eigen::MatrixXd(expected));
}

TEST(Interconnect, PortMismatchThrows) {
  EXPECT_THROW(interconnect(pendulum_system(), integrator_controller(nullptr, 2)), StructuralError);
}

TEST(Interconnect, CompositeValidatesOnRandomSystems) {
  Xoshiro256 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3, nc = 2, m = 2;
    auto rnd = [&](int r, int c) {
      Eigen::MatrixXd A(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) A(i, j) = rng.uniform(-1, 1);
      return A;
    };
    const Eigen::MatrixXd A = rnd(n, n), B = rnd(n, n), Ac = rnd(nc, nc), Bc = rnd(nc, nc);
    const PortHamiltonianSystem plant(Eigen::MatrixXd(A - A.transpose()), Eigen::MatrixXd(B * B.transpose()), rnd(n, m),
                                      std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Identity(n, n)),
                                      Box::uniform(n, -1, 1));
    const PortHamiltonianSystem ctrl(Eigen::MatrixXd(Ac - Ac.transpose()), Eigen::MatrixXd(Bc * Bc.transpose()),
                                     rnd(nc, m), std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Identity(nc, nc)),
                                     Box::uniform(nc, -1, 1));
    const auto composite = interconnect(plant, ctrl).as_port_hamiltonian();
    const auto samples = random_states(composite.region(), 5, static_cast<std::uint64_t>(trial));
    const auto rep = validate_structure(composite, samples);
    EXPECT_LE(rep.max_skewness, 1e-9);
    EXPECT_GE(rep.min_damping_eigenvalue, -1e-9);
    // Closed-loop passivity with v = v_c = 0.
    for (const auto& z : samples) EXPECT_LE(passivity_residual(composite, z, Eigen::VectorXd::Zero(2 * m)), 1e-9);
  }
}

TEST(Interconnect, LosslessLoopConservesEnergyAlongTrajectory) {
  const auto Hc = std::make_shared<QuadraticHamiltonian>(Eigen::MatrixXd::Constant(1, 1, 2.0));
  const auto composite = interconnect(pendulum_system(), integrator_controller(Hc)).as_port_hamiltonian();
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(2);
  const auto traj = rk4_integrate([&](const Eigen::VectorXd& z) { return vector_field(composite, z, u0); },
                                  Eigen::Vector3d(1.0, -0.5, 0.3), 0.01, 10.0,
                                  Observers{nullptr, [&](const Eigen::VectorXd& z) { return composite.hamiltonian()(ad::VecX<double>(z)); }, nullptr});
  const double h0 = traj.energy.front();
  for (double h : traj.energy) EXPECT_LE(std::abs(h - h0), 1e-6 * h0);
}

TEST(Box, GridAndSampling) {
  const Box b = Box::uniform(3, -2, 2);
  const auto g = b.grid(9);
  EXPECT_EQ(g.size(), 729u);
  EXPECT_EQ(g.front(), Eigen::Vector3d::Constant(-2));
  EXPECT_EQ(g.back(), Eigen::Vector3d::Constant(2));
  Xoshiro256 rng(1);
  for (int k = 0; k < 100; ++k) EXPECT_TRUE(b.contains(b.sample(rng)));
}

TEST(Hamiltonian, DimensionChecked) {
  const PendulumHamiltonian h;
  EXPECT_THROW(h(ad::VecX<double>(Eigen::Vector3d::Zero())), StructuralError);
  const auto sys = integrator_controller();
  EXPECT_THROW(sys.hamiltonian(), StructuralError);
}

}  // namespace
}  // namespace necc

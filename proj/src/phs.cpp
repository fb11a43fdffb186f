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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "necc/linalg.hpp"

namespace necc {

namespace {

std::string dims(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_size(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n) {
    throw StructuralError(std::string(what) + ": expected size " + std::to_string(n) + ", got " +
                          std::to_string(v.size()));
  }
}

}  // namespace

QuadraticHamiltonian::QuadraticHamiltonian(Eigen::MatrixXd Q) : Q_(std::move(Q)) {
  if (Q_.rows() != Q_.cols() || Q_.rows() == 0) throw StructuralError("QuadraticHamiltonian: Q must be square");
  if (linalg::asymmetry(Q_) > 1e-12 * std::max(1.0, Q_.norm())) {
    throw StructuralError("QuadraticHamiltonian: Q must be symmetric");
  }
}

NeuralHamiltonian::NeuralHamiltonian(Mlp net, std::vector<double> params)
    : net_(std::move(net)), params_(std::move(params)) {
  if (params_.size() != net_.parameter_count()) throw StructuralError("NeuralHamiltonian: parameter count mismatch");
}

SumHamiltonian::SumHamiltonian(std::shared_ptr<const Hamiltonian> first, std::shared_ptr<const Hamiltonian> second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (!first_ || !second_) throw StructuralError("SumHamiltonian: both parts are required");
}

StateMatrix::StateMatrix(Eigen::MatrixXd constant)
    : rows_(constant.rows()), cols_(constant.cols()), value_(std::move(constant)) {
  if (!std::get<Eigen::MatrixXd>(value_).allFinite()) throw StructuralError("StateMatrix: non-finite entries");
}

StateMatrix::StateMatrix(Eigen::Index rows, Eigen::Index cols, Function fn)
    : rows_(rows), cols_(cols), value_(std::move(fn)) {}

Eigen::MatrixXd StateMatrix::operator()(const Eigen::VectorXd& x) const {
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&value_)) return *m;
  Eigen::MatrixXd m = std::get<Function>(value_)(x);
  if (m.rows() != rows_ || m.cols() != cols_) {
    throw StructuralError("StateMatrix: function returned " + dims(m) + ", declared " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  return m;
}

const Eigen::MatrixXd& StateMatrix::constant() const {
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&value_)) return *m;
  throw StructuralError("StateMatrix: matrix is state-dependent");
}

Box Box::uniform(Eigen::Index dim, double lo, double hi) {
  return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

bool Box::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Eigen::VectorXd Box::sample(Xoshiro256& rng) const {
  Eigen::VectorXd x(lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(lower(i), upper(i));
  return x;
}

std::vector<Eigen::VectorXd> Box::grid(int points_per_axis) const {
  if (points_per_axis < 1) throw StructuralError("Box::grid: need at least one point per axis");
  const Eigen::Index n = lower.size();
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  auto coord = [&](Eigen::Index i, int k) {
    if (points_per_axis == 1) return 0.5 * (lower(i) + upper(i));
    return lower(i) + (upper(i) - lower(i)) * k / (points_per_axis - 1);
  };
  while (true) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = coord(i, idx[static_cast<std::size_t>(i)]);
    pts.push_back(std::move(x));
    Eigen::Index d = n - 1;
    while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == points_per_axis) {
      idx[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return pts;
}

PortHamiltonianSystem::PortHamiltonianSystem(StateMatrix J, StateMatrix R, StateMatrix G,
                                             std::shared_ptr<const Hamiltonian> hamiltonian, Box region)
    : J_(std::move(J)), R_(std::move(R)), G_(std::move(G)), hamiltonian_(std::move(hamiltonian)),
      region_(std::move(region)) {
  const auto n = J_.rows();
  if (n == 0 || J_.cols() != n) throw StructuralError("PortHamiltonianSystem: J must be square and non-empty");
  if (R_.rows() != n || R_.cols() != n) throw StructuralError("PortHamiltonianSystem: R must be n x n");
  if (G_.rows() != n || G_.cols() == 0) throw StructuralError("PortHamiltonianSystem: G must be n x m with m >= 1");
  if (hamiltonian_ && hamiltonian_->dimension() != n) {
    throw StructuralError("PortHamiltonianSystem: Hamiltonian dimension " +
                          std::to_string(hamiltonian_->dimension()) + " does not match state dimension " +
                          std::to_string(n));
  }
  if (region_.dimension() != 0 && region_.dimension() != n) {
    throw StructuralError("PortHamiltonianSystem: region dimension does not match state dimension");
  }
}

const Hamiltonian& PortHamiltonianSystem::hamiltonian() const {
  if (!hamiltonian_) throw StructuralError("PortHamiltonianSystem: no Hamiltonian supplied");
  return *hamiltonian_;
}

PortHamiltonianSystem PortHamiltonianSystem::with_hamiltonian(std::shared_ptr<const Hamiltonian> h) const {
  return {J_, R_, G_, std::move(h), region_};
}

Eigen::VectorXd PortHamiltonianSystem::energy_gradient(const Eigen::VectorXd& x) const {
  require_size(x, state_dim(), "energy_gradient");
  const Hamiltonian& h = hamiltonian();
  return ad::grad([&](const auto& s) { return h(s); }, x);
}

ValidationReport validate_structure(const PortHamiltonianSystem& sys, const std::vector<Eigen::VectorXd>& samples) {
  ValidationReport rep;
  rep.min_damping_eigenvalue = std::numeric_limits<double>::infinity();
  rep.min_input_singular_value = std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    require_size(x, sys.state_dim(), "validate_structure");
    const Eigen::MatrixXd J = sys.J()(x);
    const Eigen::MatrixXd R = sys.R()(x);
    const Eigen::MatrixXd G = sys.G()(x);
    rep.max_skewness = std::max(rep.max_skewness, (J + J.transpose()).norm());
    const double asym = linalg::asymmetry(R);
    if (asym > 1e-9) {
      rep.findings.push_back("R not symmetric (|R - R^T| = " + std::to_string(asym) + ")");
      rep.min_damping_eigenvalue = std::min(rep.min_damping_eigenvalue, -asym);
    } else {
      rep.min_damping_eigenvalue = std::min(rep.min_damping_eigenvalue, linalg::min_eigenvalue(R));
    }
    const Eigen::MatrixXd gram = G.transpose() * G;
    rep.min_input_singular_value =
        std::min(rep.min_input_singular_value, std::sqrt(std::max(0.0, linalg::min_eigenvalue(gram))));
  }
  if (samples.empty()) {
    rep.min_damping_eigenvalue = 0.0;
    rep.min_input_singular_value = 0.0;
    rep.findings.push_back("no sample points given");
  }
  if (rep.max_skewness > 1e-9) {
    rep.findings.push_back("J not skew-symmetric (max |J + J^T| = " + std::to_string(rep.max_skewness) + ")");
  }
  if (rep.min_damping_eigenvalue < -1e-9) {
    rep.findings.push_back("R has a negative eigenvalue (" + std::to_string(rep.min_damping_eigenvalue) + ")");
  }
  if (rep.min_input_singular_value < 1e-9) {
    rep.findings.push_back("G is not full column rank (min singular value " +
                           std::to_string(rep.min_input_singular_value) + ")");
  }
  rep.passed = rep.findings.empty();
  return rep;
}

Eigen::VectorXd vector_field(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  require_size(x, sys.state_dim(), "vector_field (state)");
  require_size(u, sys.input_dim(), "vector_field (input)");
  const Eigen::VectorXd dH = sys.energy_gradient(x);
  return (sys.J()(x) - sys.R()(x)) * dH + sys.G()(x) * u;
}

Eigen::VectorXd output(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x) {
  require_size(x, sys.state_dim(), "output");
  return sys.G()(x).transpose() * sys.energy_gradient(x);
}

double passivity_residual(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const Eigen::VectorXd dH = sys.energy_gradient(x);
  const Eigen::VectorXd xdot = vector_field(sys, x, u);
  const Eigen::VectorXd y = sys.G()(x).transpose() * dH;
  return dH.dot(xdot) - y.dot(u);
}

ClosedLoopSystem::ClosedLoopSystem(PortHamiltonianSystem plant, PortHamiltonianSystem controller)
    : plant_(std::move(plant)), controller_(std::move(controller)) {
  if (plant_.input_dim() != controller_.input_dim()) {
    throw StructuralError("interconnect: plant has " + std::to_string(plant_.input_dim()) +
                          " ports but controller has " + std::to_string(controller_.input_dim()));
  }
  const int n = plant_.state_dim();
  const int nc = controller_.state_dim();
  const int N = n + nc;

  auto assemble_J = [n, nc](const Eigen::MatrixXd& J, const Eigen::MatrixXd& G, const Eigen::MatrixXd& Jc,
                            const Eigen::MatrixXd& Gc) {
    Eigen::MatrixXd out(n + nc, n + nc);
    out.topLeftCorner(n, n) = J;
    out.topRightCorner(n, nc) = -G * Gc.transpose();
    out.bottomLeftCorner(nc, n) = Gc * G.transpose();
    out.bottomRightCorner(nc, nc) = Jc;
    return out;
  };
  auto assemble_R = [n, nc](const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rc) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + nc, n + nc);
    out.topLeftCorner(n, n) = R;
    out.bottomRightCorner(nc, nc) = Rc;
    return out;
  };

  const auto& P = plant_;
  const auto& C = controller_;
  if (P.J().is_constant() && P.G().is_constant() && C.J().is_constant() && C.G().is_constant()) {
    J_cl_ = StateMatrix(assemble_J(P.J().constant(), P.G().constant(), C.J().constant(), C.G().constant()));
  } else {
    J_cl_ = StateMatrix(N, N, [P, C, n, nc, assemble_J](const Eigen::VectorXd& z) {
      const Eigen::VectorXd x = z.head(n);
      const Eigen::VectorXd xi = z.tail(nc);
      return assemble_J(P.J()(x), P.G()(x), C.J()(xi), C.G()(xi));
    });
  }
  if (P.R().is_constant() && C.R().is_constant()) {
    R_cl_ = StateMatrix(assemble_R(P.R().constant(), C.R().constant()));
  } else {
    R_cl_ = StateMatrix(N, N, [P, C, n, nc, assemble_R](const Eigen::VectorXd& z) {
      return assemble_R(P.R()(z.head(n)), C.R()(z.tail(nc)));
    });
  }
}

Eigen::MatrixXd ClosedLoopSystem::input_matrix(const Eigen::VectorXd& z) const {
  require_size(z, state_dim(), "input_matrix");
  const int n = plant_dim();
  const int nc = controller_dim();
  const int m = port_dim();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + nc, 2 * m);
  B.topLeftCorner(n, m) = plant_.G()(z.head(n));
  B.bottomRightCorner(nc, m) = controller_.G()(z.tail(nc));
  return B;
}

ClosedLoopSystem ClosedLoopSystem::with_controller_hamiltonian(std::shared_ptr<const Hamiltonian> h) const {
  return {plant_, controller_.with_hamiltonian(std::move(h))};
}

PortHamiltonianSystem ClosedLoopSystem::as_port_hamiltonian() const {
  std::shared_ptr<const Hamiltonian> total;
  if (plant_.has_hamiltonian() && controller_.has_hamiltonian()) {
    total = std::make_shared<SumHamiltonian>(plant_.hamiltonian_ptr(), controller_.hamiltonian_ptr());
  }
  Box region;
  if (plant_.region().dimension() > 0 && controller_.region().dimension() > 0) {
    region.lower.resize(state_dim());
    region.upper.resize(state_dim());
    region.lower << plant_.region().lower, controller_.region().lower;
    region.upper << plant_.region().upper, controller_.region().upper;
  }
  const int N = state_dim();
  const int m = port_dim();
  StateMatrix G = plant_.G().is_constant() && controller_.G().is_constant()
                      ? StateMatrix(input_matrix(Eigen::VectorXd::Zero(N)))
                      : StateMatrix(N, 2 * m, [self = *this](const Eigen::VectorXd& z) { return self.input_matrix(z); });
  return {J_cl_, R_cl_, std::move(G), std::move(total), std::move(region)};
}

ClosedLoopSystem interconnect(const PortHamiltonianSystem& plant, const PortHamiltonianSystem& controller) {
  return {plant, controller};
}

}  // namespace necc

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

#ifndef NECC_PHS_HPP
#define NECC_PHS_HPP

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "necc/ad/derivatives.hpp"
#include "necc/ad/dual.hpp"
#include "necc/ad/functions.hpp"
#include "necc/neural.hpp"
#include "necc/random.hpp"

namespace necc {

// Every Hamiltonian is evaluable on this closed set of scalars: plain values,
// up to third-order forward derivatives, and tape variables with up to two
// nested forward levels (training differentiates gradients and Hessians).
#define NECC_HAMILTONIAN_SCALARS(X) \
  X(double)                         \
  X(ad::Dual1)                      \
  X(ad::Dual2)                      \
  X(ad::Dual3)                      \
  X(ad::Var)                        \
  X(ad::VarDual1)                   \
  X(ad::VarDual2)

/// Differentiable scalar energy function of the state.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;
  virtual int dimension() const = 0;

#define NECC_DECLARE_EVAL(S) virtual S operator()(const ad::VecX<S>& x) const = 0;
  NECC_HAMILTONIAN_SCALARS(NECC_DECLARE_EVAL)
#undef NECC_DECLARE_EVAL
};

/// Implements the virtual evaluations from `template <class S> S evaluate(const VecX<S>&) const`.
template <class Derived>
class HamiltonianBase : public Hamiltonian {
 public:
#define NECC_OVERRIDE_EVAL(S)                                       \
  S operator()(const ad::VecX<S>& x) const final {                  \
    check_dimension(x.size());                                      \
    return static_cast<const Derived&>(*this).template evaluate<S>(x); \
  }
  NECC_HAMILTONIAN_SCALARS(NECC_OVERRIDE_EVAL)
#undef NECC_OVERRIDE_EVAL

 private:
  void check_dimension(Eigen::Index n) const {
    if (n != this->dimension()) {
      throw StructuralError("Hamiltonian: expected state of size " + std::to_string(this->dimension()) +
                            ", got " + std::to_string(n));
    }
  }
};

/// H(q, p) = p^2 / 2 + (1 - cos q).
class PendulumHamiltonian final : public HamiltonianBase<PendulumHamiltonian> {
 public:
  int dimension() const override { return 2; }
  template <class S>
  S evaluate(const ad::VecX<S>& x) const {
    return 0.5 * (x(1) * x(1)) + (1.0 - ad::cos(x(0)));
  }
};

/// H(x) = x^T Q x / 2 with Q symmetric.
class QuadraticHamiltonian final : public HamiltonianBase<QuadraticHamiltonian> {
 public:
  explicit QuadraticHamiltonian(Eigen::MatrixXd Q);
  int dimension() const override { return static_cast<int>(Q_.rows()); }
  const Eigen::MatrixXd& matrix() const { return Q_; }

  template <class S>
  S evaluate(const ad::VecX<S>& x) const {
    S acc(0.0);
    for (Eigen::Index i = 0; i < Q_.rows(); ++i) {
      for (Eigen::Index j = 0; j < Q_.cols(); ++j) {
        if (Q_(i, j) != 0.0) acc += (x(i) * x(j)) * (0.5 * Q_(i, j));
      }
    }
    return acc;
  }

 private:
  Eigen::MatrixXd Q_;
};

/// A trained (frozen) network used as a Hamiltonian.
class NeuralHamiltonian final : public HamiltonianBase<NeuralHamiltonian> {
 public:
  NeuralHamiltonian(Mlp net, std::vector<double> params);
  int dimension() const override { return net_.input_dim(); }
  const Mlp& network() const { return net_; }
  std::span<const double> params() const { return params_; }

  template <class S>
  S evaluate(const ad::VecX<S>& x) const {
    return net_.forward<double, S>(params_, x);
  }

 private:
  Mlp net_;
  std::vector<double> params_;
};

/// H(x, xi) = H_a(x) + H_b(xi) on the concatenated state.
class SumHamiltonian final : public HamiltonianBase<SumHamiltonian> {
 public:
  SumHamiltonian(std::shared_ptr<const Hamiltonian> first, std::shared_ptr<const Hamiltonian> second);
  int dimension() const override { return first_->dimension() + second_->dimension(); }

  template <class S>
  S evaluate(const ad::VecX<S>& z) const {
    const auto n = first_->dimension();
    const ad::VecX<S> x = z.head(n);
    const ad::VecX<S> xi = z.tail(second_->dimension());
    return (*first_)(x) + (*second_)(xi);
  }

 private:
  std::shared_ptr<const Hamiltonian> first_;
  std::shared_ptr<const Hamiltonian> second_;
};

/**
 * @brief A structure matrix J, R or G: constant or a function of the state.
 *
 * State-dependent matrices are validated pointwise only.
 */
class StateMatrix {
 public:
  using Function = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  StateMatrix() = default;
  StateMatrix(Eigen::MatrixXd constant);  // NOLINT(google-explicit-constructor)
  StateMatrix(Eigen::Index rows, Eigen::Index cols, Function fn);

  Eigen::MatrixXd operator()(const Eigen::VectorXd& x) const;
  bool is_constant() const { return std::holds_alternative<Eigen::MatrixXd>(value_); }
  /// Throws StructuralError for state-dependent matrices.
  const Eigen::MatrixXd& constant() const;
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::variant<Eigen::MatrixXd, Function> value_;
};

/// Axis-aligned box [lo_i, hi_i].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box uniform(Eigen::Index dim, double lo, double hi);
  Eigen::Index dimension() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Xoshiro256& rng) const;
  /// Regular grid with `points_per_axis` points per coordinate (endpoints included).
  std::vector<Eigen::VectorXd> grid(int points_per_axis) const;
};

/// x' = (J(x) - R(x)) dH/dx + G(x) u,  y = G(x)^T dH/dx.
class PortHamiltonianSystem {
 public:
  /// `hamiltonian` may be null for a controller whose energy is learned later.
  PortHamiltonianSystem(StateMatrix J, StateMatrix R, StateMatrix G,
                        std::shared_ptr<const Hamiltonian> hamiltonian, Box region = {});

  int state_dim() const { return static_cast<int>(J_.rows()); }
  int input_dim() const { return static_cast<int>(G_.cols()); }
  const StateMatrix& J() const { return J_; }
  const StateMatrix& R() const { return R_; }
  const StateMatrix& G() const { return G_; }
  const Box& region() const { return region_; }
  bool has_hamiltonian() const { return hamiltonian_ != nullptr; }
  /// Throws StructuralError when the Hamiltonian has not been supplied.
  const Hamiltonian& hamiltonian() const;
  std::shared_ptr<const Hamiltonian> hamiltonian_ptr() const { return hamiltonian_; }

  PortHamiltonianSystem with_hamiltonian(std::shared_ptr<const Hamiltonian> h) const;

  Eigen::VectorXd energy_gradient(const Eigen::VectorXd& x) const;

 private:
  StateMatrix J_, R_, G_;
  std::shared_ptr<const Hamiltonian> hamiltonian_;
  Box region_;
};

struct ValidationReport {
  double max_skewness = 0.0;            ///< max |J + J^T|_F
  double min_damping_eigenvalue = 0.0;  ///< min lambda_min(R)
  double min_input_singular_value = 0.0;
  bool passed = false;
  std::vector<std::string> findings;
};

/// Checks skewness <= 1e-9, lambda_min(R) >= -1e-9 and sigma_min(G) >= 1e-9 at every sample.
ValidationReport validate_structure(const PortHamiltonianSystem& sys,
                                    const std::vector<Eigen::VectorXd>& samples);

Eigen::VectorXd vector_field(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u);
Eigen::VectorXd output(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x);

/// dH/dt - y^T u; equals -(dH/dx)^T R (dH/dx), never positive for a valid system.
double passivity_residual(const PortHamiltonianSystem& sys, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u);

/**
 * @brief Plant and controller joined by u = -y_c + v, u_c = y + v_c.
 *
 * State z = (x, xi). J_cl = [[J, -G G_c^T], [G_c G^T, J_c]],
 * R_cl = blockdiag(R, R_c), auxiliary input matrix blockdiag(G, G_c).
 */
class ClosedLoopSystem {
 public:
  ClosedLoopSystem(PortHamiltonianSystem plant, PortHamiltonianSystem controller);

  const PortHamiltonianSystem& plant() const { return plant_; }
  const PortHamiltonianSystem& controller() const { return controller_; }
  int plant_dim() const { return plant_.state_dim(); }
  int controller_dim() const { return controller_.state_dim(); }
  int state_dim() const { return plant_dim() + controller_dim(); }
  int port_dim() const { return plant_.input_dim(); }

  const StateMatrix& J() const { return J_cl_; }
  const StateMatrix& R() const { return R_cl_; }
  Eigen::MatrixXd input_matrix(const Eigen::VectorXd& z) const;
  bool has_constant_structure() const { return J_cl_.is_constant() && R_cl_.is_constant(); }

  ClosedLoopSystem with_controller_hamiltonian(std::shared_ptr<const Hamiltonian> h) const;

  /// The composite as a PHS with inputs (v, v_c) and Hamiltonian H + H_c
  /// (absent if either part has none).
  PortHamiltonianSystem as_port_hamiltonian() const;

 private:
  PortHamiltonianSystem plant_;
  PortHamiltonianSystem controller_;
  StateMatrix J_cl_;
  StateMatrix R_cl_;
};

/// Throws StructuralError when the port dimensions differ.
ClosedLoopSystem interconnect(const PortHamiltonianSystem& plant, const PortHamiltonianSystem& controller);

}  // namespace necc

#endif  // NECC_PHS_HPP

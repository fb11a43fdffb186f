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

#ifndef NECC_CASIMIR_HPP
#define NECC_CASIMIR_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "necc/ad/derivatives.hpp"
#include "necc/neural.hpp"
#include "necc/phs.hpp"

namespace necc {

/// ker J_cl ∩ ker R_cl is trivial: no Casimir can be parameterized, use the grid cost.
class NoCasimirError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

/// The kernel parameterization needs constant J_cl, R_cl.
class UnsupportedStructureError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

/**
 * @brief C(z) = K(sum_i beta_i(z^T v_i)) over an orthonormal basis {v_i} of
 * ker J_cl ∩ ker R_cl.
 *
 * dC/dz = K' * sum_i beta_i' v_i stays in span{v_i} for any network
 * parameters, so C is a Casimir of the closed loop by construction. An
 * absent beta_i means the identity.
 */
struct CasimirParameterization {
  Eigen::MatrixXd basis;  ///< N x r, orthonormal columns
  std::vector<std::optional<NetworkSlot>> inner;
  NetworkSlot outer;

  int rank() const { return static_cast<int>(basis.cols()); }
  int state_dim() const { return static_cast<int>(basis.rows()); }

  /// sum_i beta_i(z^T v_i), the input of K.
  template <class P, class S>
  S inner_sum(std::span<const P> theta, const ad::VecX<S>& z) const {
    if (z.size() != basis.rows()) throw StructuralError("Casimir: state dimension mismatch");
    S sum(0.0);
    for (Eigen::Index i = 0; i < basis.cols(); ++i) {
      S s(0.0);
      for (Eigen::Index k = 0; k < basis.rows(); ++k) {
        if (basis(k, i) != 0.0) s += z(k) * basis(k, i);
      }
      const auto& beta = inner[static_cast<std::size_t>(i)];
      sum += beta ? beta->scalar(theta, s) : s;
    }
    return sum;
  }

  template <class P, class S>
  S operator()(std::span<const P> theta, const ad::VecX<S>& z) const {
    return outer.scalar(theta, inner_sum(theta, z));
  }
};

/**
 * Builds the parameterization for a closed loop with constant structure and
 * registers K (as "K") and each beta_i (as "beta_<i>") in `params`.
 * `widths_beta` empty means identity inner maps. Throws NoCasimirError when
 * the kernel intersection is trivial and UnsupportedStructureError when
 * J_cl or R_cl depend on the state.
 */
CasimirParameterization build_parameterization(const ClosedLoopSystem& cl, ParamVector& params,
                                               const std::vector<int>& widths_K,
                                               const std::vector<int>& widths_beta, std::uint64_t seed,
                                               Activation activation = Activation::Tanh,
                                               Init init = Init::GlorotUniform);

double casimir_eval(const CasimirParameterization& C, std::span<const double> theta, const Eigen::VectorXd& z);
Eigen::VectorXd casimir_grad(const CasimirParameterization& C, std::span<const double> theta,
                             const Eigen::VectorXd& z);

/// |(dC/dz)^T (J - R)| for a given gradient and structure.
template <class S>
S casimir_residual(const ad::VecX<S>& grad_C, const Eigen::MatrixXd& J_minus_R) {
  ad::VecX<S> row(J_minus_R.cols());
  for (Eigen::Index j = 0; j < J_minus_R.cols(); ++j) {
    S acc(0.0);
    for (Eigen::Index i = 0; i < J_minus_R.rows(); ++i) {
      if (J_minus_R(i, j) != 0.0) acc += grad_C(i) * J_minus_R(i, j);
    }
    row(j) = acc;
  }
  return ad::norm(row);
}

double casimir_residual(const Eigen::VectorXd& grad_C, const ClosedLoopSystem& cl, const Eigen::VectorXd& z);

struct IntegrabilityReport {
  double max_violation = 0.0;  ///< max |dF_i/dz_j - dF_j/dz_i|
  bool passed = false;         ///< max_violation <= 1e-6
};

using VectorProgram = std::function<ad::VecX<ad::Dual1>(const ad::VecX<ad::Dual1>&)>;

IntegrabilityReport check_integrability(const VectorProgram& F, const std::vector<Eigen::VectorXd>& samples);

/// C(z) = K(sum_i integral_0^{z_i} F_i(s) ds) for per-coordinate profiles F_i.
class SeparableCasimir {
 public:
  using Profile = std::function<double(double)>;
  /// Outer map with its derivative carried by the dual number.
  using Outer = std::function<ad::Dual1(const ad::Dual1&)>;

  explicit SeparableCasimir(std::vector<Profile> profiles, Outer outer = {}, double abs_tol = 1e-10);

  static Outer network_outer(Mlp net, std::vector<double> params);

  int state_dim() const { return static_cast<int>(profiles_.size()); }
  /// Sum of the per-coordinate antiderivatives (adaptive Simpson from 0).
  double inner(const Eigen::VectorXd& z) const;
  double operator()(const Eigen::VectorXd& z) const;
  /// K'(inner) * (F_1(z_1), ..., F_N(z_N)).
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;

 private:
  std::vector<Profile> profiles_;
  Outer outer_;
  double abs_tol_;
};

double separable_casimir_eval(const SeparableCasimir& C, const Eigen::VectorXd& z);

/// Adaptive Simpson quadrature; throws NumericError if the tolerance is not
/// met within the recursion limit.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol);

}  // namespace necc

#endif  // NECC_CASIMIR_HPP

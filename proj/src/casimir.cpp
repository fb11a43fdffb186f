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

#include "necc/casimir.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "necc/linalg.hpp"
#include "necc/random.hpp"

namespace necc {

CasimirParameterization build_parameterization(const ClosedLoopSystem& cl, ParamVector& params,
                                               const std::vector<int>& widths_K,
                                               const std::vector<int>& widths_beta, std::uint64_t seed,
                                               Activation activation, Init init) {
  if (!cl.has_constant_structure()) {
    throw UnsupportedStructureError(
        "Casimir parameterization needs constant J_cl and R_cl; use SeparableCasimir or the grid cost");
  }
  const Eigen::MatrixXd basis = linalg::intersect_kernels(cl.J().constant(), cl.R().constant());
  if (basis.cols() == 0) {
    throw NoCasimirError("ker J_cl ∩ ker R_cl is trivial: no Casimir to parameterize; use the grid cost");
  }
  CasimirParameterization C{basis, {}, mlp_new(params, "K", widths_K, activation, derive_seed(seed, 0), init)};
  for (Eigen::Index i = 0; i < basis.cols(); ++i) {
    if (widths_beta.empty()) {
      C.inner.emplace_back(std::nullopt);
    } else {
      C.inner.emplace_back(mlp_new(params, "beta_" + std::to_string(i + 1), widths_beta, activation,
                                   derive_seed(seed, static_cast<std::uint64_t>(i + 1)), init));
    }
  }
  return C;
}

double casimir_eval(const CasimirParameterization& C, std::span<const double> theta, const Eigen::VectorXd& z) {
  return C(theta, z);
}

Eigen::VectorXd casimir_grad(const CasimirParameterization& C, std::span<const double> theta,
                             const Eigen::VectorXd& z) {
  return ad::grad([&](const auto& s) { return C(theta, s); }, z);
}

double casimir_residual(const Eigen::VectorXd& grad_C, const ClosedLoopSystem& cl, const Eigen::VectorXd& z) {
  if (grad_C.size() != cl.state_dim() || z.size() != cl.state_dim()) {
    throw StructuralError("casimir_residual: dimension mismatch");
  }
  return casimir_residual<double>(grad_C, cl.J()(z) - cl.R()(z));
}

IntegrabilityReport check_integrability(const VectorProgram& F, const std::vector<Eigen::VectorXd>& samples) {
  IntegrabilityReport rep;
  for (const auto& z : samples) {
    const Eigen::MatrixXd J = ad::jacobian([&](const ad::VecX<ad::Dual1>& x) { return F(x); }, z);
    if (J.rows() != J.cols()) throw StructuralError("check_integrability: F must map R^N to R^N");
    rep.max_violation = std::max(rep.max_violation, (J - J.transpose()).cwiseAbs().maxCoeff());
  }
  rep.passed = rep.max_violation <= 1e-6;
  return rep;
}

namespace {

struct SimpsonFailure {
  double a, b;
};

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (!std::isfinite(delta)) throw SimpsonFailure{a, b};
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) throw SimpsonFailure{a, b};
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  try {
    return simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, 50);
  } catch (const SimpsonFailure& fail) {
    std::ostringstream msg;
    msg << "adaptive Simpson did not converge on [" << a << ", " << b << "]; failing subinterval [" << fail.a
        << ", " << fail.b << "] at tolerance " << abs_tol;
    throw NumericError(msg.str());
  }
}

SeparableCasimir::SeparableCasimir(std::vector<Profile> profiles, Outer outer, double abs_tol)
    : profiles_(std::move(profiles)), outer_(std::move(outer)), abs_tol_(abs_tol) {
  if (profiles_.empty()) throw StructuralError("SeparableCasimir: need at least one profile");
  if (!outer_) outer_ = [](const ad::Dual1& s) { return s; };
}

SeparableCasimir::Outer SeparableCasimir::network_outer(Mlp net, std::vector<double> params) {
  if (net.input_dim() != 1) throw StructuralError("SeparableCasimir: outer network must have one input");
  return [net = std::move(net), params = std::move(params)](const ad::Dual1& s) {
    return net.forward_scalar<double, ad::Dual1>(params, s);
  };
}

double SeparableCasimir::inner(const Eigen::VectorXd& z) const {
  if (z.size() != state_dim()) throw StructuralError("SeparableCasimir: state dimension mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    sum += adaptive_simpson(profiles_[static_cast<std::size_t>(i)], 0.0, z(i), abs_tol_);
  }
  return sum;
}

double SeparableCasimir::operator()(const Eigen::VectorXd& z) const { return outer_(ad::Dual1(inner(z))).v; }

Eigen::VectorXd SeparableCasimir::gradient(const Eigen::VectorXd& z) const {
  const double k_prime = outer_(ad::Dual1(inner(z), 1.0)).d;
  Eigen::VectorXd g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g(i) = k_prime * profiles_[static_cast<std::size_t>(i)](z(i));
  return g;
}

double separable_casimir_eval(const SeparableCasimir& C, const Eigen::VectorXd& z) { return C(z); }

}  // namespace necc

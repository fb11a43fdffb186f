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

#ifndef NECC_AD_DERIVATIVES_HPP
#define NECC_AD_DERIVATIVES_HPP

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "necc/ad/dual.hpp"
#include "necc/ad/functions.hpp"
#include "necc/ad/reductions.hpp"
#include "necc/ad/var.hpp"

namespace necc::ad {

// A "scalar program" is any callable that is generic in its scalar type:
//   [](const auto& z) { ... }  with z an Eigen column vector.
// grad evaluates it on Dual<T>, hessian on Dual<Dual<T>>. T is double or Var.

/// Gradient by n forward passes.
template <class T, class F>
VecX<T> grad(F&& f, const VecX<T>& at) {
  const Eigen::Index n = at.size();
  VecX<T> g(n);
  VecX<Dual<T>> z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) z(k) = Dual<T>(at(k), T(k == i ? 1.0 : 0.0));
    g(i) = f(z).d;
  }
  return g;
}

template <class T>
struct SecondOrder {
  T value{};
  VecX<T> gradient;
  MatX<T> hessian;
};

/// Value, gradient and Hessian from n(n+1)/2 nested forward passes. The
/// Hessian is symmetric by construction (one pass per unordered pair).
template <class T, class F>
SecondOrder<T> second_order(F&& f, const VecX<T>& at) {
  using D2 = Dual<Dual<T>>;
  const Eigen::Index n = at.size();
  SecondOrder<T> out{T(0.0), VecX<T>(n), MatX<T>(n, n)};
  VecX<D2> z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        z(k) = D2(Dual<T>(at(k), T(k == i ? 1.0 : 0.0)), Dual<T>(T(k == j ? 1.0 : 0.0), T(0.0)));
      }
      D2 r = f(z);
      if (i == j) {
        out.gradient(i) = r.v.d;
        if (i == 0) out.value = r.v.v;
      }
      out.hessian(i, j) = r.d.d;
      out.hessian(j, i) = r.d.d;
    }
  }
  if (n == 0) out.value = f(z).v.v;
  return out;
}

template <class T, class F>
MatX<T> hessian(F&& f, const VecX<T>& at) {
  return second_order(std::forward<F>(f), at).hessian;
}

/// Jacobian of a vector-valued generic program (one forward pass per input).
template <class T, class F>
MatX<T> jacobian(F&& f, const VecX<T>& at) {
  const Eigen::Index n = at.size();
  VecX<Dual<T>> z(n);
  MatX<T> J;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) z(k) = Dual<T>(at(k), T(k == i ? 1.0 : 0.0));
    VecX<Dual<T>> r = f(z);
    if (i == 0) J.resize(r.size(), n);
    for (Eigen::Index m = 0; m < r.size(); ++m) J(m, i) = r(m).d;
  }
  return J;
}

struct ParamGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
  /// A min-eigenvalue with a (near-)repeated smallest eigenvalue was differentiated.
  bool degenerate = false;
};

/**
 * Reverse-mode gradient of `loss` over all parameters. `loss` receives the
 * parameters as tape leaves (std::span<const Var>) and may internally use
 * grad / second_order / min_eigenvalue with T = Var.
 */
template <class F>
ParamGradient param_grad(F&& loss, std::span<const double> params, Tape& tape) {
  tape.clear();
  ActiveTapeScope scope(tape);
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(tape.variable(p));
  Var out = loss(std::span<const Var>(leaves));
  return {out.value(), tape.gradient(out, leaves), tape.degenerate_eigenvalue_count() > 0};
}

template <class F>
ParamGradient param_grad(F&& loss, std::span<const double> params) {
  Tape tape;
  return param_grad(std::forward<F>(loss), params, tape);
}

}  // namespace necc::ad

#endif  // NECC_AD_DERIVATIVES_HPP

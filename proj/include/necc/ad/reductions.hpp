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

#ifndef NECC_AD_REDUCTIONS_HPP
#define NECC_AD_REDUCTIONS_HPP

#include <Eigen/Core>

#include "necc/ad/functions.hpp"
#include "necc/ad/var.hpp"

namespace necc::ad {

template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Euclidean norm. At the origin the (sub)gradient is taken as zero.
double norm(const VecX<double>& x);
Var norm(const VecX<Var>& x);

/// Gap below which the two smallest eigenvalues count as repeated.
inline constexpr double kDegenerateEigenGap = 1e-8;

/**
 * Smallest eigenvalue of a symmetric matrix. The Var overload records
 * d(lambda_min) = v^T dS v with v the unit eigenvector chosen by the
 * sign convention of linalg::symmetric_eig, and notes a degeneracy on the
 * active tape when the two smallest eigenvalues are within kDegenerateEigenGap.
 */
double min_eigenvalue(const MatX<double>& S);
Var min_eigenvalue(const MatX<Var>& S);

template <class S>
VecX<double> values_of(const VecX<S>& x) {
  VecX<double> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = value_of(x(i));
  return out;
}

template <class S>
MatX<double> values_of(const MatX<S>& x) {
  MatX<double> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = value_of(x(i, j));
  return out;
}

}  // namespace necc::ad

#endif  // NECC_AD_REDUCTIONS_HPP

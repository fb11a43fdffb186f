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

#ifndef NECC_LINALG_HPP
#define NECC_LINALG_HPP

#include <Eigen/Core>

namespace necc::linalg {

/**
 * @brief Full eigendecomposition of a real symmetric matrix.
 *
 * Eigenvalues ascend; column i of `eigenvectors` pairs with eigenvalue i and
 * has its largest-magnitude component positive.
 */
struct SymmetricSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm is at
/// most 1e-12 of the matrix norm. Throws StructuralError if S is not square,
/// has non-finite entries, or is asymmetric beyond 1e-9 max(1, |S|).
SymmetricSpectrum symmetric_eig(const Eigen::MatrixXd& S);

double min_eigenvalue(const Eigen::MatrixXd& S);

/// Orthonormal basis of ker M, one vector per column (zero columns when the
/// kernel is trivial). Rank decisions use Gaussian elimination with partial
/// pivoting; a pivot counts as zero when |pivot| <= tol * max|M_ij|.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& M, double tol = 1e-9);

/// Orthonormal basis of ker A ∩ ker B (kernel of the stacked matrix).
Eigen::MatrixXd intersect_kernels(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  double tol = 1e-9);

/// Flips v so its largest-magnitude component (first one on ties) is positive.
void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v);

/// Frobenius norm of S - S^T.
double asymmetry(const Eigen::MatrixXd& S);

}  // namespace necc::linalg

#endif  // NECC_LINALG_HPP

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

#include "necc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "necc/errors.hpp"

namespace necc::linalg {

namespace {

constexpr int kMaxSweeps = 100;

void require_finite(const Eigen::MatrixXd& M, const char* what) {
  if (!M.allFinite()) throw StructuralError(std::string(what) + ": matrix has non-finite entries");
}

}  // namespace

double asymmetry(const Eigen::MatrixXd& S) { return (S - S.transpose()).norm(); }

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    // Earlier index wins unless strictly (beyond rounding) larger.
    if (std::abs(v(i)) > std::abs(v(best)) * (1.0 + 1e-12)) best = i;
  }
  if (v.size() > 0 && v(best) < 0.0) v = -v;
}

SymmetricSpectrum symmetric_eig(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols() || S.rows() == 0) {
    throw StructuralError("symmetric_eig: matrix must be square and non-empty, got " +
                          std::to_string(S.rows()) + "x" + std::to_string(S.cols()));
  }
  require_finite(S, "symmetric_eig");
  const double scale = S.norm();
  if (asymmetry(S) > 1e-9 * std::max(1.0, scale)) {
    throw StructuralError("symmetric_eig: matrix is not symmetric (|S - S^T| = " +
                          std::to_string(asymmetry(S)) + ")");
  }

  const Eigen::Index n = S.rows();
  Eigen::MatrixXd A = 0.5 * (S + S.transpose());
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
    if (std::sqrt(off) <= 1e-12 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p);
          const double akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k);
          const double aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p);
          const double vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return A(a, a) < A(b, b); });

  SymmetricSpectrum out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    out.eigenvalues(i) = A(src, src);
    out.eigenvectors.col(i) = V.col(src);
    canonicalize_sign(out.eigenvectors.col(i));
  }
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& S) { return symmetric_eig(S).eigenvalues(0); }

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& M, double tol) {
  if (!(tol > 0.0)) throw StructuralError("kernel_basis: tolerance must be positive");
  require_finite(M, "kernel_basis");
  const Eigen::Index rows = M.rows();
  const Eigen::Index cols = M.cols();
  const double scale = M.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Eigen::MatrixXd::Identity(cols, cols);

  // Gauss-Jordan to reduced row echelon form.
  Eigen::MatrixXd A = M;
  std::vector<Eigen::Index> pivot_cols;
  std::vector<Eigen::Index> free_cols;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < cols; ++col) {
    if (row == rows) {
      free_cols.push_back(col);
      continue;
    }
    Eigen::Index pivot = row;
    for (Eigen::Index i = row + 1; i < rows; ++i)
      if (std::abs(A(i, col)) > std::abs(A(pivot, col))) pivot = i;
    if (std::abs(A(pivot, col)) <= tol * scale) {
      free_cols.push_back(col);
      continue;
    }
    A.row(pivot).swap(A.row(row));
    A.row(row) /= A(row, col);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i != row && A(i, col) != 0.0) A.row(i) -= A(i, col) * A.row(row);
    }
    pivot_cols.push_back(col);
    ++row;
  }

  Eigen::MatrixXd basis(cols, static_cast<Eigen::Index>(free_cols.size()));
  for (std::size_t f = 0; f < free_cols.size(); ++f) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cols);
    v(free_cols[f]) = 1.0;
    for (std::size_t k = 0; k < pivot_cols.size(); ++k)
      v(pivot_cols[k]) = -A(static_cast<Eigen::Index>(k), free_cols[f]);
    basis.col(static_cast<Eigen::Index>(f)) = v;
  }

  // Modified Gram-Schmidt, applied twice for orthogonality to working precision.
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < j; ++k)
        basis.col(j) -= basis.col(k).dot(basis.col(j)) * basis.col(k);
    }
    basis.col(j).normalize();
  }
  if (basis.cols() == 1) canonicalize_sign(basis.col(0));
  return basis;
}

Eigen::MatrixXd intersect_kernels(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol) {
  if (A.cols() != B.cols()) {
    throw StructuralError("intersect_kernels: column counts differ (" + std::to_string(A.cols()) +
                          " vs " + std::to_string(B.cols()) + ")");
  }
  Eigen::MatrixXd stacked(A.rows() + B.rows(), A.cols());
  stacked << A, B;
  return kernel_basis(stacked, tol);
}

}  // namespace necc::linalg

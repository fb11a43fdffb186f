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

#include <cmath>

#include <gtest/gtest.h>

#include "necc/errors.hpp"
#include "necc/random.hpp"
#include "oracles.hpp"

namespace necc::linalg {
namespace {

Eigen::MatrixXd random_symmetric(Xoshiro256& rng, int n) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  return 0.5 * (A + A.transpose());
}

// Largest principal angle residual: how far the columns of A are from span(B).
double projection_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() == 0) return 0.0;
  return (A - B * (B.transpose() * A)).norm();
}

TEST(SymmetricEig, Identity) {
  const auto s = symmetric_eig(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(s.eigenvalues.isApprox(Eigen::Vector3d::Ones()));
  EXPECT_LE((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-10);
}

TEST(SymmetricEig, DiagonalSortedAscending) {
  const auto s = symmetric_eig(Eigen::Vector3d(3, 1, 2).asDiagonal());
  EXPECT_DOUBLE_EQ(s.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues(1), 2.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues(2), 3.0);
  // Column 0 pairs with eigenvalue 1, which lives on axis 1.
  EXPECT_NEAR(s.eigenvectors(1, 0), 1.0, 1e-15);
}

TEST(SymmetricEig, MatchesCharacteristicPolynomialRoots) {
  Xoshiro256 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd S = random_symmetric(rng, 4);
    const auto roots = oracle::eigenvalues_by_bisection(S);
    ASSERT_EQ(roots.size(), 4u) << "trial " << trial;
    const auto s = symmetric_eig(S);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.eigenvalues(i), roots[static_cast<std::size_t>(i)], 1e-8);
  }
}

TEST(SymmetricEig, PairsAndOrthonormalityOnRandomMatrices) {
  Xoshiro256 rng(3);
  for (int n = 1; n <= 32; n += 3) {
    const Eigen::MatrixXd S = random_symmetric(rng, n);
    const auto s = symmetric_eig(S);
    const double scale = std::max(1.0, S.norm());
    for (int i = 0; i < n; ++i) {
      EXPECT_LE((S * s.eigenvectors.col(i) - s.eigenvalues(i) * s.eigenvectors.col(i)).norm(), 1e-10 * scale);
      if (i > 0) {
        EXPECT_LE(s.eigenvalues(i - 1), s.eigenvalues(i));
      }
    }
    EXPECT_LE((s.eigenvectors.transpose() * s.eigenvectors - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
    const Eigen::MatrixXd rebuilt = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
    EXPECT_LE((rebuilt - S).norm(), 1e-9 * scale);
  }
}

TEST(SymmetricEig, SignConventionLargestComponentPositive) {
  Xoshiro256 rng(5);
  const auto s = symmetric_eig(random_symmetric(rng, 6));
  for (int i = 0; i < 6; ++i) {
    Eigen::Index k;
    s.eigenvectors.col(i).cwiseAbs().maxCoeff(&k);
    EXPECT_GT(s.eigenvectors(k, i), 0.0);
  }
}

TEST(SymmetricEig, PsdMinimumNotMeaningfullyNegative) {
  Xoshiro256 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd B(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) B(i, j) = rng.uniform(-2.0, 2.0);
    const Eigen::MatrixXd S = B * B.transpose();  // rank 3, PSD
    EXPECT_GE(min_eigenvalue(S), -1e-10 * S.norm());
  }
}

TEST(SymmetricEig, RejectsNonSquareAndAsymmetric) {
  EXPECT_THROW(symmetric_eig(Eigen::MatrixXd::Zero(2, 3)), StructuralError);
  Eigen::Matrix2d A;
  A << 1, 2, 0, 1;
  EXPECT_THROW(symmetric_eig(A), StructuralError);
  Eigen::Matrix2d nan = Eigen::Matrix2d::Identity();
  nan(0, 0) = std::nan("");
  EXPECT_THROW(symmetric_eig(nan), StructuralError);
}

TEST(KernelBasis, PendulumClosedLoop) {
  Eigen::Matrix3d Jcl;
  Jcl << 0, 1, 0, -1, 0, -1, 0, 1, 0;
  const Eigen::MatrixXd K = kernel_basis(Jcl);
  ASSERT_EQ(K.cols(), 1);
  const Eigen::Vector3d expected = Eigen::Vector3d(1, 0, -1) / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(K.col(0).dot(expected)), 1.0, 1e-12);
  EXPECT_LE((Jcl * K).norm(), 1e-12);
}

TEST(KernelBasis, FullRankIsEmpty) { EXPECT_EQ(kernel_basis(Eigen::MatrixXd::Identity(4, 4)).cols(), 0); }

TEST(KernelBasis, ZeroMatrixSpansEverything) {
  const Eigen::MatrixXd K = kernel_basis(Eigen::MatrixXd::Zero(3, 3));
  ASSERT_EQ(K.cols(), 3);
  EXPECT_LE((K.transpose() * K - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
}

TEST(KernelBasis, RandomLowRankResidualsAndDimension) {
  Xoshiro256 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6, rank = 1 + trial % 5;
    Eigen::MatrixXd A(rank, n);
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
    const Eigen::MatrixXd K = kernel_basis(A);
    EXPECT_EQ(K.cols(), n - rank);
    EXPECT_LE((A * K).norm(), 1e-9 * std::max(1.0, A.norm()));
    EXPECT_LE((K.transpose() * K - Eigen::MatrixXd::Identity(K.cols(), K.cols())).norm(), 1e-12);
  }
}

TEST(KernelBasis, RejectsNonPositiveTolerance) {
  EXPECT_THROW(kernel_basis(Eigen::MatrixXd::Identity(2, 2), 0.0), StructuralError);
}

TEST(IntersectKernels, PendulumWithZeroDamping) {
  Eigen::Matrix3d Jcl;
  Jcl << 0, 1, 0, -1, 0, -1, 0, 1, 0;
  const Eigen::MatrixXd K = intersect_kernels(Jcl, Eigen::MatrixXd::Zero(3, 3));
  ASSERT_EQ(K.cols(), 1);
  EXPECT_NEAR(std::abs(K(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(K(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(K(0, 0), -K(2, 0), 1e-12);
}

TEST(IntersectKernels, IdentityPairIsEmpty) {
  EXPECT_EQ(intersect_kernels(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)).cols(), 0);
}

TEST(IntersectKernels, SharedAxis) {
  // ker A = span{e1, e2}, ker B = span{e2, e3}.
  Eigen::RowVector3d a(0, 0, 1), b(1, 0, 0);
  const Eigen::MatrixXd A = a;
  const Eigen::MatrixXd B = b;
  ASSERT_LE((A * Eigen::Vector3d::UnitX()).norm() + (A * Eigen::Vector3d::UnitY()).norm(), 0.0);
  ASSERT_LE((B * Eigen::Vector3d::UnitY()).norm() + (B * Eigen::Vector3d::UnitZ()).norm(), 0.0);
  const Eigen::MatrixXd K = intersect_kernels(A, B);
  ASSERT_EQ(K.cols(), 1);
  EXPECT_NEAR(K(1, 0), 1.0, 1e-15);
}

TEST(IntersectKernels, ColumnMismatchThrows) {
  EXPECT_THROW(intersect_kernels(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 2)), StructuralError);
}

TEST(IntersectKernels, RecomputingOnStackedSystemSpansSameSubspace) {
  Xoshiro256 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd A(2, 6), B(2, 6);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 6; ++j) {
        A(i, j) = rng.uniform(-1.0, 1.0);
        B(i, j) = rng.uniform(-1.0, 1.0);
      }
    const Eigen::MatrixXd K = intersect_kernels(A, B);
    Eigen::MatrixXd stacked(4, 6);
    stacked << A, B;
    const Eigen::MatrixXd K2 = kernel_basis(stacked);
    ASSERT_EQ(K.cols(), K2.cols());
    EXPECT_LE(projection_residual(K, K2), 1e-9);
    EXPECT_LE(projection_residual(K2, K), 1e-9);
  }
}

}  // namespace
}  // namespace necc::linalg

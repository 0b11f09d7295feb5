// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mmwce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mmwce/error.hpp"
#include "mmwce/numerics.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace mmwce;
using namespace mmwce::test;

TEST(CMatrix, RejectsNonFiniteAndSizeMismatch) {
    EXPECT_THROW(CMatrix(2, 2, {1, 2, 3}), Error);
    EXPECT_THROW(CMatrix(1, 1, {cplx(std::numeric_limits<double>::quiet_NaN(), 0)}), Error);
    EXPECT_THROW(CMatrix(1, 1, {cplx(0, std::numeric_limits<double>::infinity())}), Error);
}

TEST(CMatrix, ProductMatchesEigen) {
    const CMatrix a = random_matrix(5, 7, 1), b = random_matrix(7, 3, 2);
    EXPECT_LT(max_abs_diff(a * b, from_eigen(to_eigen(a) * to_eigen(b))), 1e-12);
    EXPECT_THROW(a * a, Error);
}

TEST(CMatrix, AdjointAndInner) {
    const CMatrix a = random_matrix(4, 6, 3), b = random_matrix(4, 6, 4);
    EXPECT_EQ(a.adjoint().adjoint(), a);
    const cplx want = (to_eigen(a).conjugate().cwiseProduct(to_eigen(b))).sum();
    EXPECT_LT(std::abs(inner(a, b) - want), 1e-12);
}

TEST(Vec, ColumnMajorAndInverse) {
    const CMatrix m = CMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    const CMatrix v = vec(m);
    ASSERT_EQ(v.rows(), 6u);
    const cplx want[] = {1, 4, 2, 5, 3, 6};
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(v(k, 0), want[k]);
    EXPECT_EQ(unvec(v, 2, 3), m);
}

TEST(Kron, VecIdentity) {
    // vec(A X B) == (B^T kron A) vec(X)
    const CMatrix a = random_matrix(3, 4, 5), x = random_matrix(4, 2, 6), b = random_matrix(2, 5, 7);
    EXPECT_LT(max_abs_diff(vec(a * x * b), kron(b.transpose(), a) * vec(x)), 1e-12);
}

TEST(Kron, MixedProduct) {
    const CMatrix a = random_matrix(2, 3, 8), b = random_matrix(3, 2, 9);
    const CMatrix c = random_matrix(3, 2, 10), d = random_matrix(2, 4, 11);
    EXPECT_LT(max_abs_diff(kron(a, c) * kron(b, d), kron(a * b, c * d)), 1e-12);
}

TEST(Kron, SizeCap) {
    try {
        (void)kron(CMatrix(1 << 14, 1), CMatrix(1 << 14, 1));
        FAIL() << "expected a size error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::size);
    }
}

class SvdShapes : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(SvdShapes, MatchesEigenAndReconstructs) {
    const auto [r, c] = GetParam();
    const CMatrix m = random_matrix(r, c, 100 + r * 31 + c);
    const SvdResult s = svd(m);
    const std::size_t k = std::min(r, c);
    ASSERT_EQ(s.s.size(), k);
    Eigen::JacobiSVD<Eigen::MatrixXcd> es(to_eigen(m));
    for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(s.s[i], es.singularValues()(Eigen::Index(i)), 1e-10);
    for (std::size_t i = 1; i < k; ++i) EXPECT_GE(s.s[i - 1], s.s[i]);
    EXPECT_LT(max_abs_diff(s.reconstruct(), m), 1e-10);
    EXPECT_LT(max_abs_diff(s.u.adjoint() * s.u, CMatrix::identity(k)), 1e-10);
    EXPECT_LT(max_abs_diff(s.v.adjoint() * s.v, CMatrix::identity(k)), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Shapes, SvdShapes,
                         ::testing::Values(std::pair{1, 1}, std::pair{1, 7}, std::pair{7, 1}, std::pair{8, 8},
                                           std::pair{8, 32}, std::pair{32, 8}, std::pair{20, 13}));

TEST(Svd, RankDeficient) {
    const CMatrix m = low_rank(12, 10, 3, 12);
    const SvdResult s = svd(m);
    EXPECT_EQ(s.rank(), 3u);
    EXPECT_LT(max_abs_diff(s.truncate(3), m), 1e-10);
}

TEST(Svd, ZeroMatrix) {
    const SvdResult s = svd(CMatrix(4, 3));
    for (double v : s.s) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(s.rank(), 0u);
}

TEST(LeastSquares, MatchesEigen) {
    const CMatrix a = random_matrix(12, 5, 13), y = random_matrix(12, 2, 14);
    const CMatrix x = least_squares(a, y);
    const Eigen::MatrixXcd want = to_eigen(a).colPivHouseholderQr().solve(to_eigen(y));
    EXPECT_LT(max_abs_diff(x, from_eigen(want)), 1e-10);
}

TEST(LeastSquares, RejectsWideAndIllConditioned) {
    EXPECT_THROW(least_squares(random_matrix(3, 5, 15), random_matrix(3, 1, 16)), Error);
    CMatrix a = random_matrix(6, 3, 17);
    for (std::size_t i = 0; i < 6; ++i) a(i, 2) = a(i, 1);
    try {
        (void)least_squares(a, random_matrix(6, 1, 18));
        FAIL() << "expected degenerate_system";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_system);
    }
}

TEST(PseudoInverse, PenroseConditions) {
    const CMatrix a = low_rank(7, 5, 3, 19);
    const CMatrix p = pseudo_inverse(a);
    EXPECT_LT(max_abs_diff(a * p * a, a), 1e-9);
    EXPECT_LT(max_abs_diff(p * a * p, p), 1e-9);
    EXPECT_LT(max_abs_diff((a * p).adjoint(), a * p), 1e-9);
    EXPECT_LT(max_abs_diff((p * a).adjoint(), p * a), 1e-9);
}

TEST(OrthonormalColumns, SpanAndOrthonormality) {
    const CMatrix m = random_matrix(9, 4, 20);
    const CMatrix q = orthonormal_columns(m);
    EXPECT_LT(max_abs_diff(q.adjoint() * q, CMatrix::identity(4)), 1e-12);
    EXPECT_LT(max_abs_diff(q * (q.adjoint() * m), m), 1e-10);
}

TEST(SoftShrink, Cases) {
    EXPECT_DOUBLE_EQ(soft_shrink(3.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(soft_shrink(-3.0, 1.0), -2.0);
    EXPECT_DOUBLE_EQ(soft_shrink(0.5, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(soft_shrink(-1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(soft_shrink(2.5, 0.0), 2.5);
}

TEST(SamplingMask, ProjectionsPartition) {
    const SamplingMask mask(3, 3, {{0, 0}, {1, 2}, {2, 1}});
    EXPECT_EQ(mask.count(), 3u);
    EXPECT_TRUE(mask.contains(1, 2));
    EXPECT_FALSE(mask.contains(2, 2));
    EXPECT_TRUE(mask.covers_all_rows_and_cols());
    const CMatrix m = random_matrix(3, 3, 21);
    EXPECT_EQ(project_mask(m, mask) + project_complement(m, mask), m);
    EXPECT_EQ(project_mask(m, SamplingMask::full(3, 3)), m);
}

TEST(SamplingMask, RejectsOutOfRange) {
    EXPECT_THROW(SamplingMask(2, 2, {{2, 0}}), Error);
}

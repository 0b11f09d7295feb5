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
#include "mmwce/frontend.hpp"
#include "mmwce/recovery.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace mmwce;
using namespace mmwce::test;

namespace {

CMatrix unit_columns(CMatrix d) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
        const double n = d.col(j).frobenius_norm();
        for (std::size_t i = 0; i < d.rows(); ++i) d(i, j) /= n;
    }
    return d;
}

CMatrix sparse_target(const CMatrix& d, const std::vector<std::size_t>& support, std::uint64_t seed,
                      CMatrix* x_out = nullptr) {
    Rng rng(seed);
    CMatrix x(d.cols(), 1);
    for (std::size_t j : support) x(j, 0) = complex_normal(rng) + cplx(1.0, 0.0);
    if (x_out) *x_out = x;
    return d * x;
}

} // namespace

TEST(Dictionary, KroneckerColumnOrder) {
    ChannelParams p;
    const AngularDictionary ad = make_dictionary(p);
    const CMatrix d = build_dictionary(ad);
    ASSERT_EQ(d.rows(), 64u);
    ASSERT_EQ(d.cols(), 256u);
    const CMatrix g = random_matrix(16, 16, 1);
    EXPECT_LT(max_abs_diff(d * vec(g), vec(ad.a_ms * g * ad.a_bs.adjoint())), 1e-10);
    for (std::size_t j = 0; j < d.cols(); ++j) EXPECT_NEAR(d.col(j).frobenius_norm(), 1.0, 1e-12);
}

TEST(OmpDictionary, GramMatchesDirectProduct) {
    const CMatrix d = unit_columns(random_matrix(6, 23, 2));
    for (std::size_t batch : {1u, 5u, 64u}) {
        const OmpDictionary od(d, batch);
        EXPECT_LT(max_abs_diff(od.gram(), d.adjoint() * d), 1e-12) << "batch " << batch;
    }
    EXPECT_THROW(OmpDictionary(random_matrix(4, 4, 3)), Error);
}

TEST(BatchOmp, ExactRecoveryOfSparseVector) {
    const CMatrix d = unit_columns(random_matrix(20, 40, 4));
    CMatrix x;
    const CMatrix y = sparse_target(d, {3, 17, 31}, 5, &x);
    OmpOptions o;
    o.sparsity_cap = 3;
    const SparseGainEstimate e = batch_omp(y, d, o);
    std::vector<std::size_t> sel = e.selection;
    std::sort(sel.begin(), sel.end());
    EXPECT_EQ(sel, (std::vector<std::size_t>{3, 17, 31}));
    EXPECT_LT(e.residual_norm, 1e-10);
    for (std::size_t j : {3u, 17u, 31u}) EXPECT_LT(std::abs(e.gains(j, 0) - x(j, 0)), 1e-10);
}

TEST(BatchOmp, MatchesNaiveSelectionAndGains) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const CMatrix d = unit_columns(random_matrix(10, 25, 100 + s));
        const CMatrix y = random_matrix(10, 1, 200 + s);
        OmpOptions o;
        o.sparsity_cap = 1 + s % 8;
        const SparseGainEstimate b = batch_omp(y, d, o);
        const SparseGainEstimate n = naive_omp(y, d, o);
        EXPECT_EQ(b.selection, n.selection) << "seed " << s;
        EXPECT_LT(max_abs_diff(b.gains, n.gains), 1e-9);
        EXPECT_NEAR(b.residual_norm, n.residual_norm, 1e-9);
        ASSERT_EQ(b.residual_history.size(), b.selection.size());
        for (std::size_t k = 1; k < b.residual_history.size(); ++k)
            EXPECT_LE(b.residual_history[k], b.residual_history[k - 1] + 1e-12);
    }
}

TEST(BatchOmp, ResidualOrthogonalToSelection) {
    const CMatrix d = unit_columns(random_matrix(12, 30, 6));
    const CMatrix y = random_matrix(12, 1, 7);
    OmpOptions o;
    o.sparsity_cap = 5;
    const SparseGainEstimate e = batch_omp(y, d, o);
    const CMatrix r = y - d * e.gains;
    EXPECT_NEAR(r.frobenius_norm(), e.residual_norm, 1e-10);
    for (std::size_t j : e.selection) EXPECT_LT(std::abs(inner(d.col(j), r)), 1e-10);
}

TEST(BatchOmp, StopsAtToleranceAndRespectsCap) {
    const CMatrix d = unit_columns(random_matrix(16, 32, 8));
    const CMatrix y = sparse_target(d, {1, 2}, 9);
    OmpOptions o;
    o.sparsity_cap = 6;
    EXPECT_EQ(batch_omp(y, d, o).selection.size(), 2u);  // exact fit reached first
    o.sparsity_cap = 1;
    const SparseGainEstimate e = batch_omp(y, d, o);
    EXPECT_EQ(e.selection.size(), 1u);
    EXPECT_EQ(e.support.size(), 1u);
}

TEST(BatchOmp, TiesPickLowestIndex) {
    // Columns 0 and 1 are equally correlated with the target.
    const CMatrix d = CMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    const CMatrix y = CMatrix::from_rows({{1}, {1}, {0}});
    OmpOptions o;
    o.sparsity_cap = 1;
    EXPECT_EQ(batch_omp(y, d, o).selection, (std::vector<std::size_t>{0}));
}

TEST(BatchOmp, SelectionPastTheSpanIsDegenerate) {
    // Four atoms already span C^4; a fifth pick cannot extend the Cholesky factor.
    const CMatrix d = unit_columns(random_matrix(4, 6, 10));
    const CMatrix y = random_matrix(4, 1, 11);
    OmpOptions o;
    o.sparsity_cap = 6;
    o.residual_tol = 0.0;
    try {
        (void)batch_omp(y, d, o);
        FAIL() << "expected degenerate_system";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_system);
    }
}

TEST(BatchOmp, ShapeErrors) {
    const CMatrix d = unit_columns(random_matrix(4, 6, 12));
    EXPECT_THROW(batch_omp(random_matrix(5, 1, 13), d, OmpOptions{}), Error);
    EXPECT_THROW(batch_omp(random_matrix(4, 2, 13), d, OmpOptions{}), Error);
    OmpOptions o;
    o.sparsity_cap = 7;
    EXPECT_THROW(batch_omp(random_matrix(4, 1, 13), d, o), Error);
}

TEST(Somp, SharedSupportAcrossColumns) {
    const CMatrix d = unit_columns(random_matrix(12, 24, 14));
    CMatrix x(24, 3);
    Rng rng(15);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t j : {4u, 9u}) x(j, c) = complex_normal(rng) + 1.0;
    OmpOptions o;
    o.sparsity_cap = 2;
    const SparseGainEstimate e = somp_baseline(d * x, d, o);
    std::vector<std::size_t> sel = e.selection;
    std::sort(sel.begin(), sel.end());
    EXPECT_EQ(sel, (std::vector<std::size_t>{4, 9}));
    EXPECT_LT(max_abs_diff(e.gains, x), 1e-10);
}

TEST(Somp, SingleColumnEqualsNaive) {
    const CMatrix d = unit_columns(random_matrix(8, 16, 16));
    const CMatrix y = random_matrix(8, 1, 17);
    OmpOptions o;
    o.sparsity_cap = 4;
    EXPECT_EQ(somp_baseline(y, d, o).selection, naive_omp(y, d, o).selection);
}

TEST(Phase2, SparsityCap) {
    OmpOptions o;
    EXPECT_EQ(phase2_sparsity_cap(o, 3, 256), 9u);
    o.linear_cap = true;
    EXPECT_EQ(phase2_sparsity_cap(o, 3, 256), 3u);
    o.sparsity_cap = 5;
    EXPECT_EQ(phase2_sparsity_cap(o, 3, 256), 5u);
    EXPECT_EQ(phase2_sparsity_cap(OmpOptions{}, 20, 256), 256u);
}

class Phase2Exact : public ::testing::TestWithParam<bool> {};

TEST_P(Phase2Exact, OnGridNoiselessChannel) {
    ChannelParams p;
    p.grid.angle_min = -std::numbers::pi / 2;
    p.grid.angle_max = std::numbers::pi / 2;
    p.n_clusters = 2;
    Rng rng(18);
    const ChannelRealization ch = generate_channel(p, rng);
    const AngularDictionary ad = make_dictionary(p);
    const PilotBlock blk = make_pilot_block(HybridConfig{8, 8, 2, 6, 8}, 8, 8, 0.0, rng);
    OmpOptions o;
    o.measurement_dictionary = GetParam();
    RankEstimate r;
    r.value = 2;
    const CMatrix input = GetParam() ? noiseless_observation(ch.matrix(), blk) : ch.matrix();
    const Phase2Result out = estimate_phase2(input, blk, ad, r, o);
    EXPECT_LT((out.channel - ch.matrix()).frobenius_norm() / ch.matrix().frobenius_norm(), 1e-8);
    EXPECT_LE(out.estimate.support.size(), 4u);
    const CMatrix hbar = angular_factorization(ch, ad);
    for (const auto& [i, j] : out.estimate.support) EXPECT_LT(std::abs(out.estimate.gains(i, j) - hbar(i, j)), 1e-8);
    ASSERT_EQ(out.estimate.parameters.size(), out.estimate.support.size());
}

INSTANTIATE_TEST_SUITE_P(Dictionaries, Phase2Exact, ::testing::Bool());

TEST(Reconstruct, MatchesFactorization) {
    ChannelParams p;
    const AngularDictionary ad = make_dictionary(p);
    SparseGainEstimate e;
    e.gains = CMatrix(16, 16);
    e.gains(2, 5) = {1.0, -2.0};
    e.support = {{2, 5}};
    const CMatrix want = cplx(1.0, -2.0) * (ad.a_ms.col(2) * ad.a_bs.col(5).adjoint());
    EXPECT_LT(max_abs_diff(reconstruct_channel(e, ad), want), 1e-14);
}

TEST(SupportCsv, HeaderAndRows) {
    SparseGainEstimate e;
    e.parameters = {{std::numbers::pi / 6, 0.0, cplx(3.0, 4.0)}};
    std::ostringstream os;
    write_support_csv(os, 7, e);
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header, "t,aoa_deg,aod_deg,gain_re,gain_im,abs_gain");
    double t, aoa, aod, re, im, mag;
    char c;
    std::istringstream rs(row);
    rs >> t >> c >> aoa >> c >> aod >> c >> re >> c >> im >> c >> mag;
    EXPECT_EQ(t, 7);
    EXPECT_NEAR(aoa, 30.0, 1e-12);
    EXPECT_EQ(aod, 0.0);
    EXPECT_EQ(mag, 5.0);
}

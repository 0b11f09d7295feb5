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

#include "mmwce/channel.hpp"
#include "mmwce/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace mmwce;
using namespace mmwce::test;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Steering, HalfWavelengthClosedForm) {
    const double lambda = 0.01;
    const double theta = 0.3;
    const CMatrix a = steering_vector(6, theta, lambda, lambda / 2);
    EXPECT_NEAR(a.frobenius_norm(), 1.0, 1e-14);
    for (std::size_t k = 0; k < 6; ++k) {
        const cplx want = std::polar(1.0 / std::sqrt(6.0), kPi * double(k) * std::sin(theta));
        EXPECT_LT(std::abs(a(k, 0) - want), 1e-14);
    }
}

TEST(AngleGrid, UniformInSine) {
    const auto g = angle_grid(16, 0.0, kPi);
    ASSERT_EQ(g.size(), 16u);
    for (std::size_t k = 0; k < 16; ++k) {
        EXPECT_NEAR(std::sin(g[k]), double(k) / 16.0, 1e-12);
        EXPECT_GE(g[k], 0.0);
        EXPECT_LE(g[k], kPi);
    }
    const auto s = angle_grid(8, -kPi / 2, kPi / 2);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(std::sin(s[k]), -1.0 + 2.0 * double(k) / 8.0, 1e-12);
}

TEST(Dictionary, UnitColumnsAndShape) {
    ChannelParams p;
    const AngularDictionary d = make_dictionary(p);
    EXPECT_EQ(d.a_ms.rows(), p.n_ms);
    EXPECT_EQ(d.a_ms.cols(), 2 * p.n_ms);
    EXPECT_EQ(d.a_bs.cols(), 2 * p.n_bs);
    for (std::size_t j = 0; j < d.a_ms.cols(); ++j) EXPECT_NEAR(d.a_ms.col(j).frobenius_norm(), 1.0, 1e-12);
    for (std::size_t j = 0; j < d.a_bs.cols(); ++j) EXPECT_NEAR(d.a_bs.col(j).frobenius_norm(), 1.0, 1e-12);
}

TEST(RaisedCosine, Shape) {
    EXPECT_DOUBLE_EQ(raised_cosine(0.0, 1.0, 0.3), 1.0);
    EXPECT_NEAR(raised_cosine(2.0, 1.0, 0.3), 0.0, 1e-14);
    EXPECT_NEAR(raised_cosine(-3.0, 1.0, 0.3), 0.0, 1e-14);
    EXPECT_EQ(raised_cosine(4.5, 1.0, 0.3), 0.0);
    // Finite at the t = T / (2 beta) singularity.
    EXPECT_TRUE(std::isfinite(raised_cosine(1.0 / 0.6, 1.0, 0.3)));
    EXPECT_NEAR(raised_cosine(0.7, 1.0, 0.0), std::sin(kPi * 0.7) / (kPi * 0.7), 1e-14);
}

class OnGridChannel : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OnGridChannel, FactorsOverDictionary) {
    ChannelParams p;
    p.n_clusters = GetParam();
    p.rays_per_cluster = {2};
    p.n_delay_taps = 3;
    Rng rng(derive_seed(31, {GetParam()}));
    const ChannelRealization ch = generate_channel(p, rng);
    const AngularDictionary d = make_dictionary(p);
    const CMatrix hbar = angular_factorization(ch, d);
    EXPECT_LT(max_abs_diff(d.a_ms * hbar * d.a_bs.adjoint(), ch.matrix()), 1e-10);

    std::size_t nonzeros = 0;
    for (const cplx& x : hbar.data()) nonzeros += std::abs(x) > 0.0;
    EXPECT_EQ(nonzeros, ch.ray_count());
    EXPECT_EQ(ch.ray_count(), 2 * GetParam());
}

INSTANTIATE_TEST_SUITE_P(Clusters, OnGridChannel, ::testing::Values(1u, 2u, 3u, 4u));

TEST(Channel, SingleRayIsRankOne) {
    ChannelParams p;
    p.n_clusters = 1;
    Rng rng(5);
    const ChannelRealization ch = generate_channel(p, rng);
    EXPECT_EQ(numerical_rank(ch.matrix()), 1u);
    // sqrt(Nbs*Nms / Lp) * |g| with a single tap at zero delay.
    const double g = std::abs(ch.clusters()[0].rays[0].gain);
    EXPECT_NEAR(ch.matrix().frobenius_norm(), std::sqrt(64.0) * g, 1e-10);
}

TEST(Channel, RaysOccupyDistinctCells) {
    ChannelParams p;
    p.n_clusters = 4;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        const ChannelRealization ch = generate_channel(p, rng);
        const AngularDictionary d = make_dictionary(p);
        const CMatrix hbar = angular_factorization(ch, d);
        std::set<std::size_t> rows, cols;
        for (std::size_t i = 0; i < hbar.rows(); ++i)
            for (std::size_t j = 0; j < hbar.cols(); ++j)
                if (std::abs(hbar(i, j)) > 0) rows.insert(i), cols.insert(j);
        EXPECT_EQ(rows.size(), 4u);
        EXPECT_EQ(cols.size(), 4u);
    }
}

TEST(Channel, OffGridRaysAreReported) {
    ChannelParams p;
    p.on_grid = false;
    Rng rng(9);
    const ChannelRealization ch = generate_channel(p, rng);
    try {
        (void)angular_factorization(ch, make_dictionary(p));
        FAIL() << "expected grid_mismatch";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::grid_mismatch);
        EXPECT_EQ(e.detail(), 0);
    }
}

TEST(Channel, SameSeedSameChannel) {
    ChannelParams p;
    p.n_clusters = 3;
    Rng a(77), b(77);
    EXPECT_EQ(generate_channel(p, a).matrix(), generate_channel(p, b).matrix());
}

TEST(Channel, ValidateRejectsSmallGrid) {
    ChannelParams p;
    p.grid.aoa_points = 4;
    EXPECT_THROW(p.validate(), Error);
    p = ChannelParams{};
    p.element_spacing = 2.0 * p.wavelength;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Evolve, ScheduleChangesClusterCount) {
    ChannelParams p;
    Rng rng(3);
    const ChannelRealization start = generate_channel(p, rng);
    const std::vector<RankChange> sched{{3, 4}, {6, 1}};
    const auto traj = evolve(start, 8, sched, rng);
    ASSERT_EQ(traj.size(), 8u);
    for (const auto& r : traj) {
        const std::size_t want = r.time_index() < 3 ? 2 : r.time_index() < 6 ? 4 : 1;
        EXPECT_EQ(r.clusters().size(), want) << "t=" << r.time_index();
        EXPECT_EQ(numerical_rank(r.matrix()), want) << "t=" << r.time_index();
    }
}

TEST(Evolve, DopplerKeepsGainMagnitudes) {
    ChannelParams p;
    Rng rng(4);
    const ChannelRealization start = generate_channel(p, rng);
    const auto traj = evolve(start, 5, {}, rng);
    for (const auto& r : traj)
        for (std::size_t c = 0; c < r.clusters().size(); ++c)
            for (std::size_t k = 0; k < r.clusters()[c].rays.size(); ++k)
                EXPECT_NEAR(std::abs(r.clusters()[c].rays[k].gain), std::abs(start.clusters()[c].rays[k].gain),
                            1e-12);
}

TEST(Evolve, RejectsScheduleOutsideHorizon) {
    ChannelParams p;
    Rng rng(5);
    const ChannelRealization start = generate_channel(p, rng);
    const std::vector<RankChange> sched{{9, 3}};
    EXPECT_THROW(evolve(start, 4, sched, rng), Error);
}

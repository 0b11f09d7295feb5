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

#include "mmwce/completion.hpp"
#include "mmwce/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmwce;
using namespace mmwce::test;

namespace {

ObservationSet masked(const CMatrix& y, double keep, std::uint64_t seed) {
    Rng rng(seed);
    ObservationSet full{y, SamplingMask::full(y.rows(), y.cols()), y, std::nullopt};
    return keep < 1.0 ? subsample(full, keep, rng) : full;
}

} // namespace

TEST(EstimateRank, EnergyRuleExample) {
    const RankEstimate e = estimate_rank_from_singular_values({10, 5, 0.1, 0.01}, 0.95);
    EXPECT_EQ(e.value, 2u);
    // alpha^2 = (100 + 25) / (100 + 25 + 0.01 + 0.0001)
    EXPECT_NEAR(e.error_factor, std::sqrt(125.0 / 125.0101), 1e-15);
    EXPECT_EQ(e.ratio_rule_value, 2u);
}

TEST(EstimateRank, MinimalK) {
    // Exactly 0.95 after two values: the minimal k reaches it there.
    EXPECT_EQ(estimate_rank_from_singular_values({std::sqrt(90.0), std::sqrt(5.0), std::sqrt(5.0)}, 0.95).value, 2u);
    EXPECT_EQ(estimate_rank_from_singular_values({1, 1, 1, 1}, 0.75).value, 3u);
    EXPECT_EQ(estimate_rank_from_singular_values({1, 1, 1, 1}, 0.76).value, 4u);
}

TEST(EstimateRank, RankOneAndLimit) {
    for (double xi : {0.1, 0.5, 0.95, 0.999999})
        EXPECT_EQ(estimate_rank(low_rank(6, 9, 1, 1), xi).value, 1u);
    EXPECT_EQ(estimate_rank(random_matrix(6, 9, 2), 1.0 - 1e-15).value, 6u);
}

TEST(EstimateRank, InvariantHolds) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const CMatrix m = random_matrix(5 + s % 4, 7, 100 + s);
        const double xi = 0.3 + 0.03 * double(s);
        const RankEstimate e = estimate_rank(m, xi);
        double tot = 0, top = 0;
        for (std::size_t i = 0; i < e.singular_values.size(); ++i) {
            tot += e.singular_values[i] * e.singular_values[i];
            if (i < e.value) top += e.singular_values[i] * e.singular_values[i];
        }
        EXPECT_GE(top, xi * tot * (1 - 1e-12));
        EXPECT_GE(e.value, 1u);
        EXPECT_LE(e.value, std::min(m.rows(), m.cols()));
    }
}

TEST(EstimateRank, Errors) {
    EXPECT_THROW(estimate_rank(CMatrix(3, 3), 0.9), Error);
    EXPECT_THROW(estimate_rank(random_matrix(3, 3, 1), 1.0), Error);
    EXPECT_THROW(estimate_rank(random_matrix(3, 3, 1), 0.0), Error);
    try {
        (void)estimate_rank(CMatrix(2, 2), 0.9);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_input);
    }
}

TEST(EstimateRank, NoiseFloorDiscountsNoiseDirections) {
    // Rank 2 plus white noise: a plain rule at xi = 0.99 counts noise
    // directions, the debiased rule does not.
    Rng rng(3);
    const CMatrix y0 = low_rank(8, 32, 2, 4);
    const double var = y0.squared_norm() / (8.0 * 32.0) / 10.0;  // 10 dB
    const CMatrix y = y0 + complex_normal_matrix(8, 32, rng, var);
    EXPECT_GT(estimate_rank(y, 0.99).value, 2u);
    EXPECT_EQ(estimate_rank(y, 0.99, noise_rank_floor(8, 32, 1.0, var)).value, 2u);
    // Nothing above the floor: rank 1.
    EXPECT_EQ(estimate_rank(y, 0.99, 1e12).value, 1u);
    EXPECT_DOUBLE_EQ(noise_rank_floor(8, 32, 0.5, 2.0), 0.5 * 2.0 * std::pow(std::sqrt(8.0) + std::sqrt(32.0), 2));
    EXPECT_EQ(noise_rank_floor(8, 32, 1.0, 0.0), 0.0);
}

TEST(RankErrorBound, EqualsTruncationError) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const CMatrix m = random_matrix(9, 6, 200 + s);
        const RankEstimate e = estimate_rank(m, 0.6 + 0.03 * double(s));
        Eigen::JacobiSVD<Eigen::MatrixXcd> es(to_eigen(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto k = Eigen::Index(e.value);
        const Eigen::MatrixXcd mk = es.matrixU().leftCols(k) *
                                    es.singularValues().head(k).cast<std::complex<double>>().asDiagonal() *
                                    es.matrixV().leftCols(k).adjoint();
        EXPECT_NEAR(rank_error_bound(e), (to_eigen(m) - mk).norm(), 1e-11);
    }
}

TEST(ArFit, RecoversCoefficients) {
    Rng rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(4000);
    double a = 0, b = 0;
    for (auto& v : x) {
        const double n = 0.5 * a - 0.3 * b + z(rng);
        b = a;
        a = n;
        v = n;
    }
    const ArFit f = fit_ar_coefficients(x, 2);
    ASSERT_EQ(f.coefficients.size(), 2u);
    EXPECT_NEAR(f.coefficients[0], 0.5, 0.05);
    EXPECT_NEAR(f.coefficients[1], -0.3, 0.05);
    EXPECT_NEAR(f.innovation_scale, 1.0, 0.05);
}

TEST(ArFit, ConstantHistoryFallsBackToPersistence) {
    const std::vector<double> x(12, 3.0);
    const ArFit f = fit_ar_coefficients(x, 1);
    ASSERT_EQ(f.coefficients.size(), 1u);
    EXPECT_DOUBLE_EQ(f.coefficients[0], 1.0);
    EXPECT_THROW(fit_ar_coefficients(std::vector<double>{1, 2}, 1), Error);
}

TEST(Tracker, PersistenceShiftsByOne) {
    RankTracker t = RankTracker::persistence(8);
    Rng rng(1);
    EXPECT_FALSE(predict_rank(t, rng).has_value());
    const std::vector<std::size_t> seq{2, 2, 3, 5, 5, 1, 8, 4};
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) EXPECT_EQ(*predict_rank(t, rng), seq[i - 1]);
        t.correct(seq[i]);
    }
}

TEST(Tracker, PredictionClamped) {
    RankTracker t(1, {2.0}, 0.0, 6);
    Rng rng(1);
    t.correct(5);
    EXPECT_EQ(*predict_rank(t, rng), 6u);
    RankTracker u(1, {-1.0}, 0.0, 6);
    u.correct(3);
    EXPECT_EQ(*predict_rank(u, rng), 1u);
}

TEST(R1mc, RecoversLowRankFromPartialSamples) {
    const CMatrix y = low_rank(20, 20, 2, 7);
    const ObservationSet obs = masked(y, 0.6, 8);
    const CompletionResult r = r1mc_complete(obs, 2, SolverOptions{});
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.completed - y).frobenius_norm() / y.frobenius_norm(), 1e-4);
    EXPECT_EQ(r.rank_estimate.value, 2u);
}

TEST(R1mc, ObservedEntriesPreserved) {
    const CMatrix y = low_rank(10, 14, 3, 9) + random_matrix(10, 14, 10);
    const ObservationSet obs = masked(y, 0.7, 11);
    const CompletionResult r = r1mc_complete(obs, std::nullopt, SolverOptions{});
    for (const auto& [i, j] : obs.mask.observed()) EXPECT_EQ(r.completed(i, j), obs.incomplete(i, j));
}

TEST(R1mc, FullMaskReturnsObservation) {
    const CMatrix y = random_matrix(6, 9, 12);
    const ObservationSet obs = masked(y, 1.0, 0);
    const CompletionResult r = r1mc_complete(obs, 2, SolverOptions{});
    EXPECT_EQ(r.completed, y);
}

TEST(R1mc, SweepsDoNotIncreaseObjectiveAndKeepUnitNorms) {
    const CMatrix y = low_rank(16, 16, 3, 13);
    const ObservationSet obs = masked(y, 0.5, 14);
    const CompletionResult r = r1mc_complete(obs, 3, SolverOptions{});
    ASSERT_FALSE(r.trace.empty());
    for (const auto& p : r.trace) {
        EXPECT_LE(p.objective, p.objective_before * (1 + 1e-12) + 1e-12) << "iteration " << p.iteration;
        EXPECT_LE(p.max_norm_deviation, 1e-10);
        EXPECT_LE(p.active_rank, 3u);
    }
}

TEST(R1mc, ZeroObservation) {
    const ObservationSet obs = masked(CMatrix(5, 5), 0.6, 15);
    const CompletionResult r = r1mc_complete(obs, std::nullopt, SolverOptions{});
    EXPECT_EQ(r.completed, CMatrix(5, 5));
    EXPECT_TRUE(r.converged);
}

TEST(R1mc, RejectsBadHint) {
    const ObservationSet obs = masked(random_matrix(4, 6, 16), 0.8, 17);
    EXPECT_THROW(r1mc_complete(obs, 5, SolverOptions{}), Error);
    EXPECT_THROW(r1mc_complete(obs, 0, SolverOptions{}), Error);
}

TEST(R1mc, WritesTrace) {
    const auto path = std::filesystem::temp_directory_path() / "mmwce_trace_test.csv";
    SolverOptions o;
    o.trace_path = path.string();
    const CompletionResult r = r1mc_complete(masked(low_rank(8, 8, 2, 18), 0.7, 19), 2, o);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "iteration,stage,objective_before,objective,feasibility,change,active_rank,max_norm_deviation");
    std::size_t lines = 0;
    for (std::string l; std::getline(is, l);) ++lines;
    EXPECT_EQ(lines, r.trace.size());
    std::filesystem::remove(path);
}

TEST(SelectRank, Precedence) {
    const ObservationSet obs = masked(low_rank(8, 12, 2, 20), 0.9, 21);
    Rng rng(1);
    RankTracker t = RankTracker::persistence(8);
    EXPECT_EQ(select_rank(obs, 5, &t, rng, 0.95), 5u);
    const std::size_t zero_filled = select_rank(obs, std::nullopt, nullptr, rng, 0.95);
    EXPECT_EQ(select_rank(obs, std::nullopt, &t, rng, 0.95), zero_filled);  // cold tracker
    t.correct(4);
    EXPECT_EQ(select_rank(obs, std::nullopt, &t, rng, 0.95), 4u);
}

TEST(CompleteTracked, FeedsEstimateBack) {
    const ObservationSet obs = masked(low_rank(10, 10, 2, 22), 0.8, 23);
    RankTracker t = RankTracker::persistence(10);
    Rng rng(2);
    const CompletionResult r = complete_tracked(obs, t, SolverOptions{}, rng);
    ASSERT_EQ(t.history().size(), 1u);
    EXPECT_EQ(t.history().back(), double(r.rank_estimate.value));
}

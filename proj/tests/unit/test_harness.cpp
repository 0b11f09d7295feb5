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
#include "mmwce/harness.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace mmwce;
using namespace mmwce::test;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.n_trials = 3;
    c.time_steps = 3;
    c.rank_schedule = {{2, 3}};
    c.snr_grid_db = {5, 20};
    return c;
}

std::string csv(const std::vector<MetricRecord>& r) {
    std::ostringstream os;
    write_records_csv(os, r);
    return os.str();
}

} // namespace

TEST(Metrics, Nmse) {
    const CMatrix h = random_matrix(4, 4, 1);
    EXPECT_EQ(nmse(h, h), 0.0);
    EXPECT_DOUBLE_EQ(nmse(h, CMatrix(4, 4)), 1.0);
    EXPECT_NEAR(nmse(h, 0.9 * h), 0.01, 1e-14);
    try {
        (void)nmse(CMatrix(4, 4), h);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::undefined_metric);
    }
}

TEST(Metrics, DbFloor) {
    EXPECT_DOUBLE_EQ(to_db(0.01), -20.0);
    EXPECT_DOUBLE_EQ(to_db(0.0), -120.0);
    EXPECT_DOUBLE_EQ(to_db(1e-20, -150.0), -150.0);
}

TEST(Metrics, RecoveryProbabilityCountsFailuresAsMisses) {
    std::vector<MetricRecord> r(4);
    r[0].nmse_db = -15;
    r[1].nmse_db = -10;
    r[2].nmse_db = -5;
    r[3].nmse_db = -30;
    r[3].error = "solver failure";
    EXPECT_DOUBLE_EQ(recovery_probability(r, -10.0), 0.5);
}

TEST(Metrics, BerPerfectVsWrongEstimate) {
    const CMatrix h = low_rank(8, 8, 2, 2);
    const double matched = ber_link(h, h, 15.0, 5000, 3);
    const double wrong = ber_link(h, random_matrix(8, 8, 4), 15.0, 5000, 3);
    EXPECT_GE(matched, 0.0);
    EXPECT_LT(matched, wrong);
    EXPECT_EQ(ber_link(h, h, 15.0, 5000, 3), matched);  // seeded
    EXPECT_THROW(ber_link(h, h, 15.0, 10, 3), Error);
}

TEST(Variant, NamesRoundTrip) {
    for (const char* n : {"rank_aware", "rank_oblivious", "coarse_only", "somp_baseline", "fixed_rank(3)"})
        EXPECT_EQ(Variant::parse(n).name(), n);
    for (const char* bad : {"", "fixed_rank()", "fixed_rank(0)", "fixed_rank(x)", "rank-aware", "fixed_rank(2"})
        EXPECT_THROW(Variant::parse(bad), Error) << bad;
}

TEST(Config, Validation) {
    ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    c.keep_fraction = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = ExperimentConfig{};
    c.snr_grid_db.clear();
    EXPECT_THROW(c.validate(), Error);
    c = ExperimentConfig{};
    c.rank_schedule = {{5, 3}};
    EXPECT_THROW(c.validate(), Error);  // time_steps is 1
    c = ExperimentConfig{};
    c.n_trials = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Sweep, CanonicalOrderAndShape) {
    const ExperimentConfig c = small_config();
    const auto recs = run_sweep(c);
    ASSERT_EQ(recs.size(), 2u * 3u * 3u);
    std::size_t k = 0;
    for (double snr : c.snr_grid_db)
        for (std::size_t tr = 0; tr < 3; ++tr)
            for (std::size_t t = 0; t < 3; ++t, ++k) {
                EXPECT_EQ(recs[k].snr_db, snr);
                EXPECT_EQ(recs[k].trial, tr);
                EXPECT_EQ(recs[k].t, t);
                EXPECT_EQ(recs[k].variant, "rank_aware");
                EXPECT_TRUE(recs[k].error.empty()) << recs[k].error;
                EXPECT_EQ(recs[k].rank_true, t < 2 ? 2u : 3u);
                EXPECT_EQ(recs[k].runtime_ms, 0.0);
            }
}

TEST(Sweep, DeterministicAcrossThreads) {
    ExperimentConfig c = small_config();
    const std::string one = csv(run_sweep(c));
    c.threads = 3;
    EXPECT_EQ(csv(run_sweep(c)), one);
    c.master_seed = 2;
    EXPECT_NE(csv(run_sweep(c)), one);
}

TEST(Sweep, PilotsAndMaskIndependentOfSnr) {
    const ExperimentConfig c = small_config();
    const auto ch = trial_channels(c, 1);
    const TrialCell a = make_cell(c, ch[0], 1, 0, 0);
    const TrialCell b = make_cell(c, ch[0], 1, 1, 0);
    EXPECT_EQ(a.block.f, b.block.f);
    EXPECT_EQ(a.observation.mask, b.observation.mask);
    EXPECT_GT(a.block.noise_var, b.block.noise_var);
}

TEST(Sweep, NoiselessFullMaskVariantsAgree) {
    // With the true rank known, rank_aware and fixed_rank(true) coincide.
    ExperimentConfig c;
    c.n_trials = 4;
    c.keep_fraction = 1.0;
    c.snr_grid_db = {300};
    c.solver.energy_ratio = 1.0 - 1e-9;
    const auto recs = run_ablation(c, {Variant::parse("rank_aware"), Variant::parse("fixed_rank(2)")});
    ASSERT_EQ(recs.size(), 8u);
    for (std::size_t i = 0; i < 4; ++i) {
        const MetricRecord& fixed = recs[i];
        const MetricRecord& aware = recs[4 + i];
        ASSERT_EQ(fixed.variant, "fixed_rank(2)");
        ASSERT_EQ(aware.variant, "rank_aware");
        EXPECT_EQ(aware.rank_est, 2u);
        EXPECT_NEAR(aware.nmse, fixed.nmse, 1e-9);
    }
}

TEST(Sweep, EveryVariantRuns) {
    ExperimentConfig c = small_config();
    c.ber_symbols = 1000;
    const auto recs = run_ablation(c, c.ablation_variants);
    ASSERT_EQ(recs.size(), 5u * 18u);
    for (const auto& r : recs) {
        EXPECT_TRUE(r.error.empty()) << r.variant << ": " << r.error;
        ASSERT_TRUE(r.ber.has_value());
        EXPECT_GE(*r.ber, 0.0);
        EXPECT_LE(*r.ber, 1.0);
    }
}

TEST(Ablation, ReportMediansAndGaps) {
    std::vector<MetricRecord> recs;
    for (int k = 0; k < 3; ++k) {
        MetricRecord a;
        a.variant = "a";
        a.snr_db = 10;
        a.t = std::size_t(k);
        a.nmse_db = -20.0 - k;
        recs.push_back(a);
        MetricRecord b = a;
        b.variant = "b";
        b.nmse_db = -10.0 - k;
        recs.push_back(b);
    }
    const AblationReport full = ablation_report(recs);
    ASSERT_EQ(full.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(full.rows[0].median_nmse_db, -21.0);
    bool found = false;
    for (const auto& g : full.gaps)
        if (g.variant == "a" && g.reference == "b") {
            EXPECT_DOUBLE_EQ(g.gap_db, 10.0);
            found = true;
        }
    EXPECT_TRUE(found);
    const AblationReport late = ablation_report(recs, 2);
    EXPECT_DOUBLE_EQ(late.rows[0].median_nmse_db, -22.0);
    EXPECT_EQ(late.rows[0].samples, 1u);

    std::vector<MetricRecord> one(recs.begin(), recs.begin() + 1);
    EXPECT_THROW(ablation_report(one), Error);
}

TEST(RecordsCsv, HeaderFollowsFieldOrder) {
    MetricRecord r;
    r.variant = "fixed_rank(2)";
    r.snr_db = 10;
    r.error = "bad, \"quoted\"";
    const std::string s = csv({r});
    EXPECT_EQ(s.substr(0, s.find('\n')),
              "variant,snr_db,trial,t,nmse,nmse_db,recovered,ber,rank_true,rank_est,runtime_ms,error");
    EXPECT_NE(s.find("\"bad, \"\"quoted\"\"\""), std::string::npos);
}
